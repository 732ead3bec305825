//! Desk-scale versions of the six naval transformation functions. Every
//! constant (ratios, density, lookup tables, thresholds) is an input slot.

use super::{FnOutput, Inputs, TransformationFn, TransformationRegistry};
use crate::error::{Error, Result};
use crate::model::SlotValue;

fn dimensions(i: &Inputs<'_>) -> Result<(f64, f64, f64)> {
    let length = i.number("overall_size")?;
    Ok((
        length,
        length * i.number("width_ratio")?,
        length * i.number("height_ratio")?,
    ))
}

fn dimension_mapping(i: &Inputs<'_>) -> Result<FnOutput> {
    let (l, w, h) = dimensions(i)?;
    Ok(FnOutput::default()
        .slot("length", l)
        .slot("width", w)
        .slot("height", h)
        .slot("volume", l * w * h))
}

fn mass_estimation(i: &Inputs<'_>) -> Result<FnOutput> {
    let volume = match i.opt("volume")? {
        Some(v) => v.as_number().ok_or_else(|| Error::NonNumericValue("volume".into()))?,
        None => {
            let (l, w, h) = dimensions(i)?;
            l * w * h
        }
    };
    let density = i.number("density")?;
    Ok(FnOutput::default()
        .slot("volume", volume)
        .slot("density", density)
        .slot("mass", volume * density))
}

fn capabilities_of<'a>(i: &'a Inputs<'_>) -> Result<(&'a str, Option<&'a [SlotValue]>)> {
    let class = i.text("class")?;
    let table = i
        .get("capability_table")?
        .as_map()
        .ok_or_else(|| Error::Invalid("capability_table must be a map".into()))?;
    Ok((class, table.get(class).and_then(SlotValue::as_list)))
}

fn capability_inference(i: &Inputs<'_>) -> Result<FnOutput> {
    let (class, caps) = capabilities_of(i)?;
    let out = FnOutput::default().slot("class", class);
    Ok(match caps {
        Some(c) => out.slot("capabilities", SlotValue::List(c.to_vec())),
        None => FnOutput {
            note: Some("unknown class".into()),
            ..out.slot("capabilities", SlotValue::List(Vec::new()))
        },
    })
}

/// First rule whose required capabilities are all present wins.
fn role_identification(i: &Inputs<'_>) -> Result<FnOutput> {
    let (class, caps) = capabilities_of(i)?;
    let caps = caps.unwrap_or_default();
    let rules = i
        .get("role_rules")?
        .as_list()
        .ok_or_else(|| Error::Invalid("role_rules must be a list".into()))?;
    let mut role = "unclassified".to_string();
    for r in rules {
        let m = r
            .as_map()
            .ok_or_else(|| Error::Invalid("each role rule must be a map".into()))?;
        let requires = m.get("requires").and_then(SlotValue::as_list).unwrap_or_default();
        if requires.iter().all(|need| caps.iter().any(|c| c.loosely_equals(need))) {
            role = m
                .get("role")
                .and_then(SlotValue::as_str)
                .ok_or_else(|| Error::Invalid("role rule without a role".into()))?
                .to_string();
            break;
        }
    }
    Ok(FnOutput::default().slot("class", class).slot("role", role))
}

fn pair(i: &Inputs<'_>, path: &str) -> Result<(f64, f64)> {
    match i.numbers(path)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Invalid(format!("input `{path}` must be a pair"))),
    }
}

/// Constant velocity over the horizon plus one environmental drift offset.
fn trajectory(i: &Inputs<'_>) -> Result<FnOutput> {
    let (x, y) = pair(i, "position")?;
    let (vx, vy) = pair(i, "velocity")?;
    let (dx, dy) = pair(i, "drift")?;
    let h = i.number("horizon")?;
    Ok(FnOutput::default()
        .slot("horizon", h)
        .slot("predicted_position", SlotValue::pair(x + vx * h + dx, y + vy * h + dy)))
}

/// Signed heading change in (-180, 180].
fn turn(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

fn behavior(i: &Inputs<'_>) -> Result<FnOutput> {
    let headings = i.numbers("heading_history")?;
    let straight = i.number("straight_tolerance")?;
    let zigzag = i.number("zigzag_min_turn")?;
    let turns: Vec<f64> = headings.windows(2).map(|w| turn(w[0], w[1])).collect();
    let closing = match i.opt("range_history")? {
        Some(_) => {
            let r = i.numbers("range_history")?;
            r.len() >= 2 && r.windows(2).all(|w| w[1] < w[0])
        }
        None => false,
    };
    let pattern = if turns.iter().all(|t| t.abs() <= straight) {
        if closing {
            "closing-course"
        } else {
            "straight-run"
        }
    } else if turns.len() >= 2
        && turns.iter().all(|t| t.abs() >= zigzag)
        && turns.windows(2).all(|w| w[0].signum() != w[1].signum())
    {
        "zigzag"
    } else {
        "irregular"
    };
    let max_turn = turns.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    Ok(FnOutput::default().slot("pattern", pattern).slot("max_turn", max_turn))
}

type Builtin = fn(&Inputs<'_>) -> Result<FnOutput>;

/// The six naval functions.
pub fn builtin_transformations() -> TransformationRegistry {
    let defs: [(&str, &str, &str, &[&str], Builtin); 6] = [
        (
            "Detailed_Dimension_Mapping",
            "Augmentation",
            "Dimensional_Profiles",
            &["overall_size", "width_ratio", "height_ratio"],
            dimension_mapping,
        ),
        (
            "Mass_Estimation",
            "Calculation",
            "Mass_Profiles",
            &["volume?", "overall_size?", "width_ratio?", "height_ratio?", "density"],
            mass_estimation,
        ),
        (
            "Capability_Inference",
            "Inference",
            "Capability_Profiles",
            &["class", "capability_table"],
            capability_inference,
        ),
        (
            "Operational_Role_Identification",
            "Classification",
            "Operational_Roles",
            &["class", "capability_table", "role_rules"],
            role_identification,
        ),
        (
            "Predictive_Trajectory_Modeling",
            "Prediction",
            "Predictive_Trajectories",
            &["position", "velocity", "horizon", "drift"],
            trajectory,
        ),
        (
            "Behavioral_Pattern_Recognition",
            "Pattern Recognition",
            "Behavioral_Insights",
            &[
                "heading_history",
                "range_history?",
                "straight_tolerance",
                "zigzag_min_turn",
            ],
            behavior,
        ),
    ];
    let mut reg = TransformationRegistry::new();
    for (name, kind, out, inputs, body) in defs {
        reg.register(TransformationFn::new(name, kind, out, inputs, body).expect("builtin definitions are valid"));
    }
    reg
}
