//! Step 2: submanifold projection, neighbor graphs, landmark geodesics and
//! geometry-preserving retraining.

mod geodesic;
mod graph;
mod loss;
mod project;
mod step2;

pub use geodesic::{choose_landmarks, dijkstra, geodesic_table, geodesics, GeodesicTable};
pub(crate) use graph::gemm_slack;
pub use graph::{knn_graph, knn_indices, NeighborGraph};
pub use loss::{geo_loss, geo_loss_pairs};
pub use project::{neighborhood_average, project_submanifold, Projection};
pub use step2::{build_geodesic_tables, step2_train, Step2Config};
