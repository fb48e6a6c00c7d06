//! Cross-validation plans.
//!
//! * LOPO — one fold per user; the fold's test set is exactly that
//!   user's windows, train is everyone else.
//! * Time-aware (TA) — users are partitioned into 5 seeded groups; for
//!   the fold of group `g`, each group-`g` user contributes their first
//!   chronological 2/3 of windows to train and the final 1/3 to test,
//!   while all other users' windows are train. The per-user boundary is
//!   adjusted so every train timestamp is strictly older than every
//!   test timestamp; users where no strict boundary exists (or with
//!   fewer than 2 windows) are excluded and reported.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::segment::WindowMeta;

/// Number of time-aware folds.
pub const TA_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    Lopo,
    TimeAware,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedUser {
    pub dataset_id: String,
    pub user_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub protocol: Protocol,
    pub folds: Vec<Fold>,
    pub seed: u64,
    /// TA group assignment provenance: per fold, the user keys.
    pub user_groups: Vec<Vec<String>>,
    pub excluded_users: Vec<ExcludedUser>,
}

impl FoldPlan {
    pub fn save(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)
    }

    pub fn load(path: &std::path::Path) -> std::io::Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}

fn user_key(m: &WindowMeta) -> String {
    format!("{}/{}", m.dataset_id, m.user_id)
}

/// Build a fold plan over window metadata.
pub fn make_folds(
    metas: &[WindowMeta],
    protocol: Protocol,
    seed: u64,
) -> Result<FoldPlan, EvalError> {
    if metas.is_empty() {
        return Err(EvalError::Empty("window metadata"));
    }
    let mut users: Vec<String> = metas.iter().map(user_key).collect();
    users.sort();
    users.dedup();

    match protocol {
        Protocol::Lopo => {
            if users.len() < 2 {
                return Err(EvalError::TooFewUsers {
                    protocol,
                    needed: 2,
                    got: users.len(),
                });
            }
            let folds = users
                .iter()
                .map(|u| {
                    let mut train = Vec::new();
                    let mut test = Vec::new();
                    for (i, m) in metas.iter().enumerate() {
                        if &user_key(m) == u {
                            test.push(i);
                        } else {
                            train.push(i);
                        }
                    }
                    Fold { train, test }
                })
                .collect();
            Ok(FoldPlan {
                protocol,
                folds,
                seed,
                user_groups: users.iter().map(|u| vec![u.clone()]).collect(),
                excluded_users: Vec::new(),
            })
        }
        Protocol::TimeAware => {
            // Per-user chronological split with a strict boundary.
            let mut excluded = Vec::new();
            let mut head_tail: std::collections::HashMap<String, (Vec<usize>, Vec<usize>)> =
                std::collections::HashMap::new();
            for u in &users {
                let mut idx: Vec<usize> = (0..metas.len())
                    .filter(|&i| user_key(&metas[i]) == *u)
                    .collect();
                idx.sort_by(|&a, &b| {
                    metas[a]
                        .t_start
                        .partial_cmp(&metas[b].t_start)
                        .unwrap()
                        .then(a.cmp(&b))
                });
                match chronological_split(&idx, metas) {
                    Some(s) => {
                        head_tail.insert(u.clone(), (idx[..s].to_vec(), idx[s..].to_vec()));
                    }
                    None => {
                        let m = &metas[idx[0]];
                        excluded.push(ExcludedUser {
                            dataset_id: m.dataset_id.clone(),
                            user_id: m.user_id.clone(),
                            reason: if idx.len() < 2 {
                                "fewer than 2 windows".into()
                            } else {
                                "no strict chronological boundary".into()
                            },
                        });
                    }
                }
            }
            let usable: Vec<String> = users
                .iter()
                .filter(|u| head_tail.contains_key(*u))
                .cloned()
                .collect();
            if usable.len() < TA_FOLDS {
                return Err(EvalError::TooFewUsers {
                    protocol,
                    needed: TA_FOLDS,
                    got: usable.len(),
                });
            }

            // Seeded partition into TA_FOLDS groups, round robin.
            let mut shuffled = usable.clone();
            shuffled.shuffle(&mut crate::rng::stream_rng(seed, 0));
            let mut groups: Vec<Vec<String>> = vec![Vec::new(); TA_FOLDS];
            for (i, u) in shuffled.iter().enumerate() {
                groups[i % TA_FOLDS].push(u.clone());
            }
            for g in &mut groups {
                g.sort();
            }

            let excluded_keys: std::collections::HashSet<String> = excluded
                .iter()
                .map(|e| format!("{}/{}", e.dataset_id, e.user_id))
                .collect();
            let folds = groups
                .iter()
                .map(|group| {
                    let in_group: std::collections::HashSet<&String> = group.iter().collect();
                    let mut train = Vec::new();
                    let mut test = Vec::new();
                    for u in &usable {
                        let (head, tail) = &head_tail[u];
                        if in_group.contains(u) {
                            train.extend_from_slice(head);
                            test.extend_from_slice(tail);
                        } else {
                            train.extend_from_slice(head);
                            train.extend_from_slice(tail);
                        }
                    }
                    // Excluded users appear in neither side.
                    debug_assert!(train
                        .iter()
                        .chain(&test)
                        .all(|&i| !excluded_keys.contains(&user_key(&metas[i]))));
                    train.sort_unstable();
                    test.sort_unstable();
                    Fold { train, test }
                })
                .collect();

            Ok(FoldPlan {
                protocol,
                folds,
                seed,
                user_groups: groups,
                excluded_users: excluded,
            })
        }
    }
}

/// Choose the split position for sorted indices: start at
/// `floor(2n/3)` and move right, then left, until the boundary is
/// strictly increasing in time. `None` when impossible.
fn chronological_split(sorted_idx: &[usize], metas: &[WindowMeta]) -> Option<usize> {
    let n = sorted_idx.len();
    if n < 2 {
        return None;
    }
    let t = |k: usize| metas[sorted_idx[k]].t_start;
    let s0 = (2 * n) / 3;
    let s0 = s0.clamp(1, n - 1);

    let mut s = s0;
    while s < n && t(s - 1) >= t(s) {
        s += 1;
    }
    if s < n {
        return Some(s);
    }
    let mut s = s0;
    while s > 0 && t(s - 1) >= t(s) {
        s -= 1;
    }
    (s > 0).then_some(s)
}
