//! Fixtures shared by the engine benchmarks.

use keraia::engine::Engine;
use keraia::model::{SlotPath, SlotValue};

/// The water plant with the pump cavitating: low suction pressure and a
/// high motor current.
pub fn cavitating_water() -> Engine {
    let mut e = keraia::packs::engine("water").expect("water pack");
    let mut set = |path: &str, v: SlotValue| {
        e.kb.set_slot("Pump", &SlotPath::parse(path).expect("path"), v)
            .expect("pump slot");
    };
    set("pressure", SlotValue::with_unit(2.0, "bar"));
    set("MotorState/Current", SlotValue::with_unit(16.0, "A"));
    e
}
