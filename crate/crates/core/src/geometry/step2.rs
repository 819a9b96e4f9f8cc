use log::{info, warn};

use crate::datagen::PairedDataset;
use crate::error::{Error, Result};
use crate::geometry::{choose_landmarks, geodesic_table, knn_graph, project_submanifold, GeodesicTable};
use crate::scalar::Scalar;
use crate::splice::{GeoTerm, LatentGroup, SpliceModel, Step1Config, Step1Trainer, TrainReport};

/// Geometry-preserving retraining.
#[derive(Clone, Debug, PartialEq)]
pub struct Step2Config {
    /// Neighbors per node of the submanifold graph.
    pub k_graph: usize,
    /// Neighborhood size for averaging projected points.
    pub k_avg: usize,
    /// Landmark count, capped at the training-set size.
    pub n_landmarks: usize,
    /// Weight of each group's geometry loss, indexed by [`LatentGroup::tag`].
    pub geo_weight: [f64; 4],
    /// Schedule of the continued alternating training. Its standardization
    /// field is ignored: step-1 statistics are kept.
    pub train: Step1Config,
}

impl Default for Step2Config {
    fn default() -> Self {
        Self {
            k_graph: 100,
            k_avg: 100,
            n_landmarks: 500,
            geo_weight: [1.0; 4],
            train: Step1Config::default(),
        }
    }
}

impl Step2Config {
    pub fn validate(&self) -> Result<()> {
        if self.k_graph == 0 || self.k_avg == 0 {
            return Err(Error::config("k_graph and k_avg must be at least 1"));
        }
        if self.n_landmarks < 2 {
            return Err(Error::config("n_landmarks must be at least 2"));
        }
        if self.geo_weight.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::config("geo_weight entries must be non-negative"));
        }
        self.train.validate()
    }

    pub fn weight(&self, g: LatentGroup) -> f64 {
        self.geo_weight[g.tag() as usize]
    }
}

/// Projects every non-empty latent group, builds its neighbor graph and the
/// landmark geodesic table. One landmark set is shared by all groups.
pub fn build_geodesic_tables<T: Scalar>(
    model: &SpliceModel<T>,
    data: &PairedDataset,
    cfg: &Step2Config,
) -> Result<Vec<GeodesicTable<T>>> {
    cfg.validate()?;
    let n = data.train_indices().len();
    let landmarks = choose_landmarks(n, cfg.n_landmarks, cfg.train.seed);
    let mut tables = Vec::new();
    for g in LatentGroup::ALL {
        if g.width(&model.dims) == 0 {
            continue;
        }
        let proj = project_submanifold(model, data, g, cfg.k_avg, cfg.train.seed)?;
        let graph = knn_graph(&proj.points, cfg.k_graph)?;
        if !graph.bridges().is_empty() {
            warn!(
                "group={g} graph needed {} bridging edges; consider a larger k_graph",
                graph.bridges().len()
            );
        }
        let table = geodesic_table(&graph, g, landmarks.clone())?;
        info!(
            "group={g} nodes={} landmarks={} bridges={}",
            graph.n_nodes(),
            table.n_landmarks(),
            graph.bridges().len()
        );
        tables.push(table);
    }
    Ok(tables)
}

/// Continues the alternating training with each table's geometry loss added
/// to the autoencoder objective. Tables index the training split in order.
pub fn step2_train<T: Scalar>(
    model: &mut SpliceModel<T>,
    data: &PairedDataset,
    tables: &[GeodesicTable<T>],
    cfg: &Step2Config,
) -> Result<TrainReport> {
    cfg.validate()?;
    let train = Step1Config {
        standardization: None,
        ..cfg.train.clone()
    };
    let terms = tables
        .iter()
        .filter(|t| cfg.weight(t.group) > 0.0)
        .map(|t| GeoTerm {
            weight: cfg.weight(t.group),
            table: t.clone(),
        })
        .collect();
    Step1Trainer::new(model, data, &train)?.with_geometry(terms)?.run()
}
