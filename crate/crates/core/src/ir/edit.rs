use thiserror::Error;

use super::{FeaturePath, FeatureStructure, Symbol, Value};

/// Structural edit on a feature structure.
#[derive(Debug, Clone, PartialEq)]
pub enum Edit {
    /// Sets the value at a path, creating intermediate structures.
    Set(FeaturePath, Value),
    Delete(FeaturePath),
    /// Wraps the value at the path into `[(new-slot value)]`.
    Reify(FeaturePath, Symbol),
    /// Splices the structure at the path into its parent level.
    Raise(FeaturePath),
    Rename(FeaturePath, Symbol),
    /// Moves the value at the first path to the second.
    Move(FeaturePath, FeaturePath),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("no value at path {0}")]
    MissingPath(String),
    #[error("value at {0} is not a structure")]
    NotAStructure(String),
    #[error("slot {slot} already exists next to {path}")]
    Collision { path: String, slot: String },
}

pub(super) fn apply(fs: &FeatureStructure, op: &Edit) -> Result<FeatureStructure, EditError> {
    let mut out = fs.clone();
    match op {
        Edit::Set(path, value) => set(&mut out, path.segments(), value.clone(), path)?,
        Edit::Delete(path) => {
            let parent = parent_mut(&mut out, path)?;
            parent
                .remove(path.last())
                .ok_or_else(|| EditError::MissingPath(path.to_string()))?;
        }
        Edit::Reify(path, new_slot) => {
            let parent = parent_mut(&mut out, path)?;
            let idx = parent
                .position(path.last())
                .ok_or_else(|| EditError::MissingPath(path.to_string()))?;
            let entry = &mut parent.slots_mut()[idx];
            let inner = std::mem::replace(&mut entry.1, Value::Struct(FeatureStructure::new()));
            entry.1 = Value::Struct(FeatureStructure {
                slots: vec![(new_slot.clone(), inner)],
            });
        }
        Edit::Raise(path) => {
            let parent = parent_mut(&mut out, path)?;
            let idx = parent
                .position(path.last())
                .ok_or_else(|| EditError::MissingPath(path.to_string()))?;
            let Value::Struct(inner) = parent.slots_mut()[idx].1.clone() else {
                return Err(EditError::NotAStructure(path.to_string()));
            };
            for (k, _) in inner.iter() {
                if k != path.last() && parent.get(k.as_str()).is_some() {
                    return Err(EditError::Collision {
                        path: path.to_string(),
                        slot: k.to_string(),
                    });
                }
            }
            let slots = parent.slots_mut();
            slots.splice(idx..=idx, inner.slots);
        }
        Edit::Rename(path, new_name) => {
            let parent = parent_mut(&mut out, path)?;
            let idx = parent
                .position(path.last())
                .ok_or_else(|| EditError::MissingPath(path.to_string()))?;
            if new_name != path.last() && parent.get(new_name.as_str()).is_some() {
                return Err(EditError::Collision {
                    path: path.to_string(),
                    slot: new_name.to_string(),
                });
            }
            parent.slots_mut()[idx].0 = new_name.clone();
        }
        Edit::Move(from, to) => {
            let value = out
                .get_path(from)
                .cloned()
                .ok_or_else(|| EditError::MissingPath(from.to_string()))?;
            out = apply(&out, &Edit::Delete(from.clone()))?;
            set(&mut out, to.segments(), value, to)?;
        }
    }
    Ok(out)
}

fn parent_mut<'a>(
    fs: &'a mut FeatureStructure,
    path: &FeaturePath,
) -> Result<&'a mut FeatureStructure, EditError> {
    let segs = path.segments();
    let mut cur = fs;
    for seg in &segs[..segs.len() - 1] {
        let idx = cur
            .position(seg)
            .ok_or_else(|| EditError::MissingPath(path.to_string()))?;
        cur = match &mut cur.slots_mut()[idx].1 {
            Value::Struct(inner) => inner,
            _ => return Err(EditError::MissingPath(path.to_string())),
        };
    }
    Ok(cur)
}

fn set(
    fs: &mut FeatureStructure,
    segs: &[Symbol],
    value: Value,
    full: &FeaturePath,
) -> Result<(), EditError> {
    let (head, rest) = segs.split_first().expect("paths are non-empty");
    if rest.is_empty() {
        fs.put(head.clone(), value);
        return Ok(());
    }
    if fs.position(head).is_none() {
        fs.put(head.clone(), Value::Struct(FeatureStructure::new()));
    }
    let idx = fs.position(head).expect("just inserted");
    match &mut fs.slots_mut()[idx].1 {
        Value::Struct(inner) => set(inner, rest, value, full),
        _ => Err(EditError::NotAStructure(full.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_ir;

    fn p(s: &str) -> FeaturePath {
        FeaturePath::parse(s).unwrap()
    }

    #[test]
    fn set_creates_levels() {
        let out = FeatureStructure::new()
            .edit(&Edit::Set(p("A.B"), Value::int(1)))
            .unwrap();
        assert_eq!(out, parse_ir("[(A [(B 1)])]").unwrap());
    }

    #[test]
    fn reify_wraps() {
        let fs = parse_ir("[(AMOUNT 600)]").unwrap();
        let out = fs
            .edit(&Edit::Reify(p("AMOUNT"), Symbol::new("VALUE")))
            .unwrap();
        assert_eq!(out, parse_ir("[(AMOUNT [(VALUE 600)])]").unwrap());
        assert_eq!(fs, parse_ir("[(AMOUNT 600)]").unwrap());
    }

    #[test]
    fn raise_splices() {
        let fs = parse_ir("[(X [(A 1)]) (B 2)]").unwrap();
        let out = fs.edit(&Edit::Raise(p("X"))).unwrap();
        assert_eq!(out, parse_ir("[(A 1) (B 2)]").unwrap());
        assert_eq!(crate::ir::serialize_ir(&out), "[(A 1) (B 2)]");
    }

    #[test]
    fn raise_collision() {
        let fs = parse_ir("[(X [(B 1)]) (B 2)]").unwrap();
        assert!(matches!(
            fs.edit(&Edit::Raise(p("X"))),
            Err(EditError::Collision { .. })
        ));
        let fs = parse_ir("[(X 3)]").unwrap();
        assert!(matches!(
            fs.edit(&Edit::Raise(p("X"))),
            Err(EditError::NotAStructure(_))
        ));
    }

    #[test]
    fn missing_paths() {
        let fs = parse_ir("[(A [(B 1)])]").unwrap();
        for op in [
            Edit::Delete(p("A.C")),
            Edit::Reify(p("Z"), Symbol::new("V")),
            Edit::Raise(p("A.B.C")),
            Edit::Rename(p("Q"), Symbol::new("R")),
            Edit::Move(p("Q"), p("R")),
        ] {
            assert!(
                matches!(fs.edit(&op), Err(EditError::MissingPath(_))),
                "{op:?}"
            );
        }
    }

    #[test]
    fn rename_and_move() {
        let fs = parse_ir("[(AMOUNT 600) (UNIT MKG-M3)]").unwrap();
        let out = fs
            .edit(&Edit::Reify(p("AMOUNT"), Symbol::new("AMOUNT")))
            .and_then(|f| f.edit(&Edit::Rename(p("AMOUNT"), Symbol::new("THRESHOLD-VALUE"))))
            .and_then(|f| f.edit(&Edit::Move(p("UNIT"), p("THRESHOLD-VALUE.UNIT"))))
            .unwrap();
        assert_eq!(
            out,
            parse_ir("[(THRESHOLD-VALUE [(AMOUNT 600) (UNIT MKG-M3)])]").unwrap()
        );
    }
}
