use std::collections::BTreeMap;

use super::{ChangeKind, CorpusSnapshot, MethodChange, MethodRecord};
use crate::error::{Error, Result};

/// Classifies method-level changes between two consecutive revisions,
/// ordered by method id. Unchanged methods are omitted.
pub fn diff_revisions(prev: &CorpusSnapshot, next: &CorpusSnapshot) -> Result<Vec<MethodChange>> {
    if next.revision != prev.revision + 1 {
        return Err(Error::RevisionOrder {
            expected: prev.revision + 1,
            found: next.revision,
        });
    }
    Ok(diff_methods(&prev.methods, &next.methods))
}

/// Change set between two method populations, regardless of revision numbers.
pub fn diff_methods(prev: &[MethodRecord], next: &[MethodRecord]) -> Vec<MethodChange> {
    let before: BTreeMap<&str, &MethodRecord> = prev.iter().map(|m| (m.id.as_str(), m)).collect();
    let after: BTreeMap<&str, &MethodRecord> = next.iter().map(|m| (m.id.as_str(), m)).collect();
    let mut changes = Vec::new();
    for (id, old) in &before {
        match after.get(id) {
            None => changes.push(MethodChange::new(*id, ChangeKind::Deletion)),
            Some(new) if !old.same_content(new) => {
                changes.push(MethodChange::new(*id, ChangeKind::Modification))
            }
            Some(_) => {}
        }
    }
    for id in after.keys() {
        if !before.contains_key(id) {
            changes.push(MethodChange::new(*id, ChangeKind::Addition));
        }
    }
    changes.sort();
    changes
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(id: &str, body: &str) -> MethodRecord {
        MethodRecord {
            id: id.into(),
            file: "F".into(),
            revision: 0,
            name: id.into(),
            tokens: body.split(' ').map(String::from).collect(),
            api_calls: vec![],
            comment: vec![],
            callees: Default::default(),
            statement_count: 1,
        }
    }

    fn snap(revision: u32, methods: Vec<MethodRecord>) -> CorpusSnapshot {
        CorpusSnapshot {
            revision,
            methods,
            ..CorpusSnapshot::default()
        }
    }

    #[test]
    fn merge_example_two_revisions() {
        let prev = snap(1, vec![m("A", "a"), m("B", "b"), m("C", "c")]);
        let next = snap(2, vec![m("A", "a"), m("C", "c changed"), m("D", "d")]);
        let changes = diff_revisions(&prev, &next).unwrap();
        assert_eq!(
            changes,
            [
                MethodChange::new("B", ChangeKind::Deletion),
                MethodChange::new("C", ChangeKind::Modification),
                MethodChange::new("D", ChangeKind::Addition),
            ]
        );
    }

    #[test]
    fn identical_snapshots_have_no_changes() {
        let prev = snap(4, vec![m("A", "a")]);
        let mut next = prev.clone();
        next.revision = 5;
        assert!(diff_revisions(&prev, &next).unwrap().is_empty());
    }

    #[test]
    fn all_new_methods_are_additions() {
        let next = snap(1, vec![m("x", "1"), m("y", "2"), m("z", "3")]);
        let changes = diff_revisions(&snap(0, vec![]), &next).unwrap();
        assert_eq!(changes.len(), 3);
        assert!(changes.iter().all(|c| c.kind == ChangeKind::Addition));
    }

    #[test]
    fn non_consecutive_revisions_are_rejected() {
        let err = diff_revisions(&snap(1, vec![]), &snap(3, vec![])).unwrap_err();
        assert!(matches!(err, Error::RevisionOrder { expected: 2, found: 3 }));
    }

    proptest! {
        #[test]
        fn self_diff_is_empty(bodies in proptest::collection::vec("[a-c]{1,3}", 0..8)) {
            let methods: Vec<_> = bodies.iter().enumerate().map(|(i, b)| m(&format!("m{i}"), b)).collect();
            prop_assert!(diff_methods(&methods, &methods).is_empty());
        }
    }
}
