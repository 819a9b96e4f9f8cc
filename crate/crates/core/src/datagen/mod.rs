//! Paired-view datasets: simulators with ground truth and file I/O.

mod csvio;
mod dataset;
mod digits;
mod idx;
mod lgnv1;
mod rotate;
mod toy;

pub use csvio::{export_dataset, fmt_f64, import_dataset, load_csv_pair, read_csv_table, write_csv, CsvTable};
pub use dataset::{random_split, PairedDataset, Split, Truth};
pub use digits::{dense_rotations, gen_rotated_digits, DigitCounts};
pub use idx::{
    load_idx_images, load_idx_labels, load_idx_pair, parse_idx_images, parse_idx_labels, IdxImages, IMAGES_MAGIC,
    LABELS_MAGIC,
};
pub use lgnv1::{
    dog_kernel, gabor_kernel, gen_lgnv1, gen_lgnv1_parts, lgnv1_kernels, total_variance, Kernel, LgnV1Config,
    LgnV1Parts,
};
pub use rotate::rotate_image;
pub use toy::{gen_linear_toy, random_orthonormal, LinearToy, LinearToyConfig};
