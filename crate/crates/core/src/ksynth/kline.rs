//! KLine path resolution through clouds, knowledge sources and slots.

use crate::drel;
use crate::error::{Error, Result};
use crate::model::{Dimension, KLinePath, KnowledgeBase, SlotPath, SlotValue};

/// Finds the knowledge source a path addresses and the slot path that
/// remains. The first segment may name a knowledge source directly or a
/// cloud; inside a cloud a member knowledge source wins over a sub-cloud of
/// the same name.
pub fn locate<'a>(kb: &'a KnowledgeBase, path: &KLinePath) -> Result<(&'a str, SlotPath)> {
    locate_from(kb, path).map(|(ks, sp, _)| (ks, sp))
}

/// Like [`locate`], also returning the index of the knowledge-source
/// segment and whether a sub-cloud shared its name.
fn locate_from<'a>(kb: &'a KnowledgeBase, path: &KLinePath) -> Result<(&'a str, SlotPath, Located)> {
    let segs = path.segments();
    let unknown = |index: usize| Error::UnknownSegment {
        index,
        segment: segs[index].clone(),
    };
    if let Some(ks) = kb.ks(&segs[0]) {
        let sp = SlotPath::new(segs[1..].iter().cloned())?;
        return Ok((
            ks.appellation.as_str(),
            sp,
            Located {
                ks_index: 0,
                shadowed_cloud: kb.cloud(&segs[0]).is_some(),
            },
        ));
    }
    let mut cloud = kb.cloud(&segs[0]).ok_or_else(|| unknown(0))?;
    for (i, seg) in segs.iter().enumerate().skip(1) {
        if cloud.member_ks.contains(seg) {
            let ks = kb.ks(seg).expect("member exists");
            let sp = SlotPath::new(segs[i + 1..].iter().cloned())?;
            return Ok((
                ks.appellation.as_str(),
                sp,
                Located {
                    ks_index: i,
                    shadowed_cloud: cloud.sub_clouds.contains(seg),
                },
            ));
        }
        if cloud.sub_clouds.contains(seg) {
            cloud = kb.cloud(seg).expect("sub-cloud exists");
            continue;
        }
        return Err(unknown(i));
    }
    Err(Error::InvalidPath(format!("`{path}` ends at a cloud")))
}

struct Located {
    ks_index: usize,
    shadowed_cloud: bool,
}

/// Reads the value a path addresses. Assumptions of `context` shadow the
/// stored value at exactly matching locations. Values not stored locally
/// are resolved through dynamic relations at tick `0`; use
/// [`resolve_kline_at`] to supply a clock.
pub fn resolve_kline(kb: &KnowledgeBase, path: &KLinePath, context: Option<&Dimension>) -> Result<SlotValue> {
    resolve_kline_at(kb, path, context, kb.tick())
}

pub fn resolve_kline_at(
    kb: &KnowledgeBase,
    path: &KLinePath,
    context: Option<&Dimension>,
    clock: u64,
) -> Result<SlotValue> {
    if path.len() < 2 {
        return Err(Error::InvalidPath(format!(
            "`{path}` needs a knowledge source and a slot"
        )));
    }
    let (ks, sp, at) = locate_from(kb, path)?;
    if let Some(dim) = context {
        for (apath, value) in &dim.assumptions {
            if let Ok((aks, asp)) = locate(kb, apath) {
                if aks == ks && asp == sp {
                    return Ok(value.clone());
                }
            }
        }
    }
    if sp.is_root() {
        return Ok(SlotValue::Map(kb.require_ks(ks)?.slots.clone()));
    }
    match drel::resolve_attribute(kb, ks, &sp, clock) {
        Ok((v, _)) => Ok(v),
        Err(Error::Unresolvable { .. }) => {
            if at.shadowed_cloud {
                return Err(Error::AmbiguousSegment {
                    index: at.ks_index,
                    segment: path.segments()[at.ks_index].clone(),
                });
            }
            // Report the first slot segment that is missing.
            let ksrc = kb.require_ks(ks)?;
            let segs = sp.segments();
            let mut depth = segs.len() - 1;
            for d in 1..=segs.len() {
                let prefix = SlotPath::new(segs[..d].iter().cloned())?;
                if ksrc.get(&prefix).is_none() {
                    depth = d - 1;
                    break;
                }
            }
            let index = at.ks_index + 1 + depth;
            Err(Error::UnknownSegment {
                index,
                segment: path.segments()[index].clone(),
            })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KnowledgeSource, SlotMap};

    fn water() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new();
        kb.add_cloud("WaterTreatmentSystem").unwrap();
        let mut ph = SlotMap::new();
        ph.insert("CurrentValue".into(), SlotValue::num(7.2));
        kb.put_ks(
            KnowledgeSource::new("WaterQuality").with_slot("pH", SlotValue::Map(ph)),
            "WaterTreatmentSystem",
        )
        .unwrap();
        kb
    }

    #[test]
    fn full_hierarchy_path_resolves() {
        let kb = water();
        let p = KLinePath::parse("WaterTreatmentSystem/WaterQuality/pH/CurrentValue").unwrap();
        assert_eq!(resolve_kline(&kb, &p, None).unwrap(), SlotValue::num(7.2));
        let d = kb.digest();
        let _ = resolve_kline(&kb, &p, None);
        assert_eq!(kb.digest(), d);
    }

    #[test]
    fn dimension_shadows() {
        let kb = water();
        let dim = Dimension {
            name: "HighPH".into(),
            description: String::new(),
            parent_juncture: None,
            assumptions: vec![(
                KLinePath::parse("WaterQuality/pH/CurrentValue").unwrap(),
                SlotValue::num(9.1),
            )],
        };
        let p = KLinePath::parse("WaterQuality/pH/CurrentValue").unwrap();
        assert_eq!(resolve_kline(&kb, &p, Some(&dim)).unwrap(), SlotValue::num(9.1));
        let full = KLinePath::parse("WaterTreatmentSystem/WaterQuality/pH/CurrentValue").unwrap();
        assert_eq!(resolve_kline(&kb, &full, Some(&dim)).unwrap(), SlotValue::num(9.1));
    }

    #[test]
    fn unknown_segments_are_indexed() {
        let kb = water();
        let p = KLinePath::parse("WaterTreatmentSystem/Nope/pH").unwrap();
        assert_eq!(
            resolve_kline(&kb, &p, None),
            Err(Error::UnknownSegment {
                index: 1,
                segment: "Nope".into()
            })
        );
        let p = KLinePath::parse("WaterTreatmentSystem/WaterQuality/pH/Missing").unwrap();
        assert!(matches!(
            resolve_kline(&kb, &p, None),
            Err(Error::UnknownSegment { index: 3, .. })
        ));
    }

    #[test]
    fn ks_beats_subcloud_and_ambiguity_reported_on_failure() {
        let mut kb = water();
        kb.add_cloud("WaterQuality").unwrap();
        kb.link_sub_cloud("WaterTreatmentSystem", "WaterQuality").unwrap();
        let ok = KLinePath::parse("WaterTreatmentSystem/WaterQuality/pH/CurrentValue").unwrap();
        assert_eq!(resolve_kline(&kb, &ok, None).unwrap(), SlotValue::num(7.2));
        let bad = KLinePath::parse("WaterTreatmentSystem/WaterQuality/Other/x").unwrap();
        assert!(matches!(
            resolve_kline(&kb, &bad, None),
            Err(Error::AmbiguousSegment { index: 1, .. })
        ));
    }
}
