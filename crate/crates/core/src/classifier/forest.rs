//! Binary random forest (CART trees, Gini impurity) with probability output.

use num_traits::Float;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed::mix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, n: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (n as f64).log2().floor() as usize,
            MaxFeatures::All => n,
            MaxFeatures::Count(c) => c,
        };
        k.clamp(1, n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            min_samples_leaf: 1,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node<T> {
    Leaf {
        /// Fraction of positive training samples that reached this leaf.
        p: T,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> DecisionTree<T> {
    pub fn predict_proba(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { p } => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Row-major training matrix view.
#[derive(Debug, Clone, Copy)]
pub struct Samples<'a, T> {
    pub data: &'a [T],
    pub dims: usize,
    pub labels: &'a [bool],
}

impl<'a, T: Scalar> Samples<'a, T> {
    pub fn new(data: &'a [T], dims: usize, labels: &'a [bool]) -> Result<Self> {
        if dims == 0 || data.len() != dims * labels.len() {
            return Err(Error::invalid(format!(
                "{} values are not {} rows of {dims} features",
                data.len(),
                labels.len()
            )));
        }
        if data.iter().any(|v| !Float::is_finite(*v)) {
            return Err(Error::invalid("training features must be finite"));
        }
        Ok(Self { data, dims, labels })
    }

    fn x(&self, row: usize, f: usize) -> T {
        self.data[row * self.dims + f]
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

struct Builder<'a, T> {
    s: Samples<'a, T>,
    cfg: &'a ForestConfig,
    mtry: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node<T>>,
}

struct BestSplit<T> {
    feature: usize,
    threshold: T,
    impurity: f64,
}

impl<T: Scalar> Builder<'_, T> {
    fn leaf(&mut self, rows: &[u32]) -> usize {
        let pos = rows.iter().filter(|&&r| self.s.labels[r as usize]).count();
        let p = T::of(pos as f64 / rows.len() as f64);
        self.nodes.push(Node::Leaf { p });
        self.nodes.len() - 1
    }

    fn grow(&mut self, rows: Vec<u32>, depth: usize) -> usize {
        let n = rows.len();
        let pos = rows.iter().filter(|&&r| self.s.labels[r as usize]).count();
        let pure = pos == 0 || pos == n;
        let depth_done = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_done || n < self.cfg.min_samples_split.max(2) {
            return self.leaf(&rows);
        }
        let Some(best) = self.best_split(&rows, pos) else {
            return self.leaf(&rows);
        };
        let (left, right): (Vec<u32>, Vec<u32>) = rows
            .iter()
            .partition(|&&r| self.s.x(r as usize, best.feature) <= best.threshold);
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { p: T::zero() });
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[me] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: l,
            right: r,
        };
        me
    }

    fn best_split(&mut self, rows: &[u32], total_pos: usize) -> Option<BestSplit<T>> {
        let n = rows.len();
        let min_leaf = self.cfg.min_samples_leaf.max(1);
        let features = sample(&mut self.rng, self.s.dims, self.mtry);
        let mut best: Option<BestSplit<T>> = None;
        let mut column: Vec<(T, bool)> = Vec::with_capacity(n);
        for f in features.iter() {
            column.clear();
            column.extend(
                rows.iter()
                    .map(|&r| (self.s.x(r as usize, f), self.s.labels[r as usize])),
            );
            column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
            let mut left_pos = 0usize;
            for i in 0..n - 1 {
                if column[i].1 {
                    left_pos += 1;
                }
                let nl = i + 1;
                let nr = n - nl;
                if column[i].0 == column[i + 1].0 || nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let right_pos = total_pos - left_pos;
                let gini = |p: usize, m: usize| {
                    let q = p as f64 / m as f64;
                    2.0 * q * (1.0 - q)
                };
                let impurity = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(right_pos, nr)) / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let half = T::of(0.5);
                    let mut threshold = column[i].0 + (column[i + 1].0 - column[i].0) * half;
                    // Guard against the midpoint rounding up to the right value.
                    if threshold >= column[i + 1].0 {
                        threshold = column[i].0;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}

fn fit_tree<T: Scalar>(s: Samples<'_, T>, cfg: &ForestConfig, seed: u64) -> DecisionTree<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = s.len();
    let rows: Vec<u32> = if cfg.bootstrap {
        let mut r: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
        r.sort_unstable();
        r
    } else {
        (0..n as u32).collect()
    };
    let mut b = Builder {
        s,
        cfg,
        mtry: cfg.max_features.resolve(s.dims),
        rng,
        nodes: Vec::new(),
    };
    b.grow(rows, 0);
    DecisionTree { nodes: b.nodes }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest<T> {
    trees: Vec<DecisionTree<T>>,
    dims: usize,
}

impl<T: Scalar> RandomForest<T> {
    /// Trees are grown in parallel; tree `i` uses a seed derived from `(seed, i)`,
    /// so the forest is identical for any thread count.
    pub fn fit(samples: Samples<'_, T>, cfg: &ForestConfig, seed: u64) -> Result<Self> {
        if cfg.n_trees == 0 {
            return Err(Error::Config("forest needs at least one tree".into()));
        }
        let pos = samples.labels.iter().filter(|&&l| l).count();
        if pos == 0 || pos == samples.len() {
            return Err(Error::invalid("training data contains a single class"));
        }
        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|i| fit_tree(samples, cfg, mix(seed, i as u64)))
            .collect();
        Ok(Self {
            trees,
            dims: samples.dims,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn trees(&self) -> &[DecisionTree<T>] {
        &self.trees
    }

    /// Mean over trees of the leaf's positive-class frequency.
    pub fn predict_proba(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.dims, "feature vector has the wrong length");
        let sum = self.trees.iter().fold(T::zero(), |acc, t| acc + t.predict_proba(x));
        sum / T::of_usize(self.trees.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_data() -> (Vec<f64>, Vec<bool>) {
        let mut x = vec![];
        let mut y = vec![];
        for i in 0..40 {
            let a = (i % 2) as f64;
            let b = ((i / 2) % 2) as f64;
            x.extend([a + 0.01 * i as f64, b - 0.005 * i as f64]);
            y.push((a > 0.5) != (b > 0.5));
        }
        (x, y)
    }

    #[test]
    fn single_tree_without_bootstrap_fits_training_data() {
        let (x, y) = xor_data();
        let cfg = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            ..Default::default()
        };
        let s = Samples::new(&x, 2, &y).unwrap();
        let f = RandomForest::fit(s, &cfg, 1).unwrap();
        for (i, &label) in y.iter().enumerate() {
            let p = f.predict_proba(&x[i * 2..i * 2 + 2]);
            assert_eq!(p, if label { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn max_depth_is_respected() {
        let (x, y) = xor_data();
        let cfg = ForestConfig {
            n_trees: 5,
            max_depth: Some(1),
            ..Default::default()
        };
        let f = RandomForest::fit(Samples::new(&x, 2, &y).unwrap(), &cfg, 3).unwrap();
        assert!(f.trees().iter().all(|t| t.depth() <= 1 && t.num_leaves() <= 2));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let (x, y) = xor_data();
        let cfg = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            min_samples_leaf: 15,
            ..Default::default()
        };
        let f = RandomForest::fit(Samples::new(&x, 2, &y).unwrap(), &cfg, 3).unwrap();
        assert!(f.trees()[0].num_leaves() <= 40 / 15);
    }

    #[test]
    fn rejects_single_class_and_bad_shapes() {
        let x = vec![0.0f64, 1.0, 2.0];
        assert!(RandomForest::fit(
            Samples::new(&x, 1, &[true, true, true]).unwrap(),
            &ForestConfig::default(),
            0
        )
        .is_err());
        assert!(Samples::new(&x, 2, &[true, false]).is_err());
        assert!(Samples::new(&[f64::NAN], 1, &[true]).is_err());
    }

    #[test]
    fn feature_subset_sizes() {
        assert_eq!(MaxFeatures::Sqrt.resolve(150), 12);
        assert_eq!(MaxFeatures::Log2.resolve(150), 7);
        assert_eq!(MaxFeatures::Count(500).resolve(150), 150);
        assert_eq!(MaxFeatures::Sqrt.resolve(1), 1);
    }

    #[test]
    fn f32_forest_matches_shape() {
        let (x, y) = xor_data();
        let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let f = RandomForest::fit(
            Samples::new(&x32, 2, &y).unwrap(),
            &ForestConfig {
                n_trees: 10,
                ..Default::default()
            },
            9,
        )
        .unwrap();
        let p = f.predict_proba(&[0.5, 0.5]);
        assert!((0.0..=1.0).contains(&p));
    }
}
