use crate::error::{Error, Result};
use crate::nncore::rng::{self, streams};
use crate::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// Ground-truth generative variables, aligned with the dataset rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Truth {
    pub shared: Option<Mat>,
    pub private_a: Option<Mat>,
    pub private_b: Option<Mat>,
    pub theta_deg: Option<Vec<f64>>,
    pub label: Option<Vec<u8>>,
}

impl Truth {
    /// Flat named columns for export (`s0`, `zA0`, `theta_deg`, ...).
    pub fn columns(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        let mut push_mat = |prefix: &str, m: &Option<Mat>| {
            if let Some(m) = m {
                for c in 0..m.cols() {
                    out.push((format!("{prefix}{c}"), m.col_vec(c)));
                }
            }
        };
        push_mat("s", &self.shared);
        push_mat("zA", &self.private_a);
        push_mat("zB", &self.private_b);
        if let Some(t) = &self.theta_deg {
            out.push(("theta_deg".into(), t.clone()));
        }
        if let Some(l) = &self.label {
            out.push(("label".into(), l.iter().map(|&v| v as f64).collect()));
        }
        out
    }

    fn rows(&self) -> Option<usize> {
        [&self.shared, &self.private_a, &self.private_b]
            .into_iter()
            .flatten()
            .map(|m| m.rows())
            .chain(self.theta_deg.as_ref().map(Vec::len))
            .chain(self.label.as_ref().map(Vec::len))
            .next()
    }

    fn check_rows(&self, n: usize) -> Result<()> {
        let ok = [&self.shared, &self.private_a, &self.private_b]
            .into_iter()
            .flatten()
            .all(|m| m.rows() == n)
            && self.theta_deg.as_ref().is_none_or(|v| v.len() == n)
            && self.label.as_ref().is_none_or(|v| v.len() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "ground truth is not aligned with {n} samples (found {:?})",
                self.rows()
            )))
        }
    }

    pub fn select(&self, idx: &[usize]) -> Truth {
        Truth {
            shared: self.shared.as_ref().map(|m| m.select_rows(idx)),
            private_a: self.private_a.as_ref().map(|m| m.select_rows(idx)),
            private_b: self.private_b.as_ref().map(|m| m.select_rows(idx)),
            theta_deg: self.theta_deg.as_ref().map(|v| idx.iter().map(|&i| v[i]).collect()),
            label: self.label.as_ref().map(|v| idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Row-aligned samples of both views with optional ground truth and a
/// train/val/test assignment per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedDataset {
    pub view_a: Mat,
    pub view_b: Mat,
    pub truth: Option<Truth>,
    pub split: Vec<Split>,
}

impl PairedDataset {
    pub fn new(view_a: Mat, view_b: Mat, truth: Option<Truth>, split: Vec<Split>) -> Result<Self> {
        let n = view_a.rows();
        if view_b.rows() != n {
            return Err(Error::config(format!(
                "views have different sample counts ({n} vs {})",
                view_b.rows()
            )));
        }
        if split.len() != n {
            return Err(Error::config(format!(
                "split has {} entries for {n} samples",
                split.len()
            )));
        }
        if let Some(t) = &truth {
            t.check_rows(n)?;
        }
        Ok(Self {
            view_a,
            view_b,
            truth,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.view_a.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == which)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self) -> Vec<usize> {
        self.indices(Split::Train)
    }

    /// Held-out rows: the test split, or validation when no test rows exist.
    pub fn heldout_indices(&self) -> Vec<usize> {
        let test = self.indices(Split::Test);
        if test.is_empty() {
            self.indices(Split::Val)
        } else {
            test
        }
    }

    /// Samples of one split as a standalone dataset.
    pub fn subset(&self, which: Split) -> PairedDataset {
        self.select(&self.indices(which))
    }

    pub fn select(&self, idx: &[usize]) -> PairedDataset {
        PairedDataset {
            view_a: self.view_a.select_rows(idx),
            view_b: self.view_b.select_rows(idx),
            truth: self.truth.as_ref().map(|t| t.select(idx)),
            split: idx.iter().map(|&i| self.split[i]).collect(),
        }
    }
}

/// Random split with `round(n * train)` training and `round(n * val)`
/// validation samples; the rest is test.
pub fn random_split(n: usize, train: f64, val: f64, seed: u64) -> Result<Vec<Split>> {
    if !(0.0..=1.0).contains(&train) || !(0.0..=1.0).contains(&val) || train + val > 1.0 + 1e-12 {
        return Err(Error::config(format!(
            "invalid split fractions train={train}, val={val}"
        )));
    }
    let n_train = (n as f64 * train).round() as usize;
    let n_val = ((n as f64 * val).round() as usize).min(n - n_train);
    let perm = rng::permutation(n, &mut rng::stream(seed, streams::SPLIT));
    let mut split = vec![Split::Test; n];
    for (rank, &i) in perm.iter().enumerate() {
        split[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_counts_are_exact_up_to_rounding() {
        let s = random_split(18_900, 0.8, 0.0, 3).unwrap();
        assert_eq!(s.iter().filter(|&&x| x == Split::Train).count(), 15_120);
        assert_eq!(s.iter().filter(|&&x| x == Split::Test).count(), 3_780);
        let s = random_split(7, 0.5, 0.25, 1).unwrap();
        assert_eq!(s.iter().filter(|&&x| x == Split::Train).count(), 4);
        assert_eq!(s.iter().filter(|&&x| x == Split::Val).count(), 2);
    }

    #[test]
    fn splits_are_disjoint_and_exhaustive() {
        let n = 101;
        let a = Mat::zeros(n, 2);
        let d = PairedDataset::new(a.clone(), a, None, random_split(n, 0.6, 0.2, 9).unwrap()).unwrap();
        let mut all: Vec<usize> = [Split::Train, Split::Val, Split::Test]
            .iter()
            .flat_map(|&s| d.indices(s))
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn misaligned_views_rejected() {
        let r = PairedDataset::new(Mat::zeros(3, 1), Mat::zeros(4, 1), None, vec![Split::Train; 3]);
        assert!(r.is_err());
        let truth = Truth {
            label: Some(vec![0, 1]),
            ..Truth::default()
        };
        let r = PairedDataset::new(Mat::zeros(3, 1), Mat::zeros(3, 1), Some(truth), vec![Split::Train; 3]);
        assert!(r.is_err());
    }
}
