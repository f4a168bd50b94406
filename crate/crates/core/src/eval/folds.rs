use std::collections::BTreeSet;

use crate::corpus::{BugReportRecord, Timestamp};
use crate::error::{Error, Result};

pub const FOLDS: usize = 10;
/// Consecutive folds used for training in each task.
pub const TRAIN_FOLDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoldMode {
    /// Chronological folds within one project.
    WithinProject,
    /// Train on all reports of one project, test on another's.
    CrossProject { train: String, test: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub name: String,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    /// Report ids per fold, chronological; empty in cross-project mode.
    pub folds: Vec<Vec<String>>,
    pub tasks: Vec<Task>,
}

fn chronological(reports: &[&BugReportRecord]) -> Vec<(Timestamp, String)> {
    let mut v: Vec<(Timestamp, String)> = reports.iter().map(|r| (r.created_at, r.id.clone())).collect();
    v.sort();
    v
}

pub fn plan_folds(reports: &[BugReportRecord], mode: &FoldMode) -> Result<FoldPlan> {
    match mode {
        FoldMode::WithinProject => {
            let projects: BTreeSet<&str> = reports.iter().map(|r| r.project.as_str()).collect();
            if projects.len() > 1 {
                return Err(Error::Planning(format!(
                    "within-project folds need a single project, found {}",
                    projects.len()
                )));
            }
            if reports.len() < FOLDS {
                return Err(Error::Planning(format!(
                    "{} reports cannot fill {FOLDS} folds",
                    reports.len()
                )));
            }
            let all: Vec<&BugReportRecord> = reports.iter().collect();
            let ordered = chronological(&all);
            let (size, extra) = (ordered.len() / FOLDS, ordered.len() % FOLDS);
            let mut folds = Vec::with_capacity(FOLDS);
            let mut start = 0;
            for f in 0..FOLDS {
                let len = size + usize::from(f < extra);
                folds.push(ordered[start..start + len].iter().map(|(_, id)| id.clone()).collect::<Vec<_>>());
                start += len;
            }
            let tasks = (0..FOLDS - TRAIN_FOLDS)
                .map(|i| Task {
                    name: format!("task{}", i + 1),
                    train: folds[i..i + TRAIN_FOLDS].concat(),
                    test: folds[i + TRAIN_FOLDS].clone(),
                })
                .collect();
            Ok(FoldPlan { folds, tasks })
        }
        FoldMode::CrossProject { train, test } => {
            if train == test {
                return Err(Error::Planning("cross-project mode needs two distinct projects".into()));
            }
            let pick = |p: &str| -> Result<Vec<String>> {
                let rs: Vec<&BugReportRecord> = reports.iter().filter(|r| r.project == p).collect();
                if rs.is_empty() {
                    return Err(Error::Planning(format!("project {p:?} has no reports")));
                }
                Ok(chronological(&rs).into_iter().map(|(_, id)| id).collect())
            };
            Ok(FoldPlan {
                folds: Vec::new(),
                tasks: vec![Task {
                    name: format!("{train}->{test}"),
                    train: pick(train)?,
                    test: pick(test)?,
                }],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn report(id: usize, created_at: i64, project: &str) -> BugReportRecord {
        BugReportRecord {
            id: format!("r{id}"),
            created_at,
            project: project.into(),
            text: String::new(),
            tokens: vec![],
            fixed_methods: Default::default(),
            fixed_by: vec![],
        }
    }

    #[test]
    fn forty_reports() {
        let reports: Vec<_> = (0..40).map(|i| report(i, i as i64, "p")).collect();
        let plan = plan_folds(&reports, &FoldMode::WithinProject).unwrap();
        assert_eq!(plan.folds.len(), 10);
        assert!(plan.folds.iter().all(|f| f.len() == 4));
        assert_eq!(plan.tasks.len(), 7);
        assert_eq!(plan.tasks[0].train.len(), 12);
        assert_eq!(plan.tasks[6].test, plan.folds[9]);
    }

    #[test]
    fn uneven_and_errors() {
        let reports: Vec<_> = (0..23).map(|i| report(i, i as i64, "p")).collect();
        let plan = plan_folds(&reports, &FoldMode::WithinProject).unwrap();
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, [3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
        assert!(matches!(
            plan_folds(&reports[..9], &FoldMode::WithinProject),
            Err(Error::Planning(_))
        ));
        let mut mixed = reports.clone();
        mixed[0].project = "q".into();
        assert!(plan_folds(&mixed, &FoldMode::WithinProject).is_err());
    }

    #[test]
    fn cross_project_is_disjoint() {
        let mut reports: Vec<_> = (0..5).map(|i| report(i, i as i64, "x")).collect();
        reports.extend((5..9).map(|i| report(i, i as i64, "y")));
        let mode = FoldMode::CrossProject {
            train: "x".into(),
            test: "y".into(),
        };
        let plan = plan_folds(&reports, &mode).unwrap();
        let t = &plan.tasks[0];
        assert_eq!(t.train.len(), 5);
        assert_eq!(t.test.len(), 4);
        assert!(t.train.iter().all(|r| !t.test.contains(r)));
        let missing = FoldMode::CrossProject {
            train: "x".into(),
            test: "z".into(),
        };
        assert!(plan_folds(&reports, &missing).is_err());
    }

    proptest! {
        #[test]
        fn folds_are_chronological(times in prop::collection::vec(0i64..50, 10..60)) {
            let reports: Vec<_> = times.iter().enumerate().map(|(i, &t)| report(i, t, "p")).collect();
            let time: HashMap<&str, i64> = reports.iter().map(|r| (r.id.as_str(), r.created_at)).collect();
            let plan = plan_folds(&reports, &FoldMode::WithinProject).unwrap();
            let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            prop_assert_eq!(sizes.iter().sum::<usize>(), reports.len());
            for task in &plan.tasks {
                let train_max = task.train.iter().map(|r| time[r.as_str()]).max().unwrap();
                let test_min = task.test.iter().map(|r| time[r.as_str()]).min().unwrap();
                prop_assert!(train_max <= test_min);
            }
        }
    }
}
