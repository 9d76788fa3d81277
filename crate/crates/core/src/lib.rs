//! MGMT methylation prediction from segmented multi-modal MR volumes.
//!
//! The crate covers the full feature-to-prediction path:
//!
//! - [`nifti`]: NIFTI-1 volume and label-mask reading/writing, tumor region derivation
//! - [`radiomics`]: first-order, shape and five 3D texture-matrix feature families
//! - [`latent`]: ingestion of precomputed latent shape vectors and table merging
//! - [`selection`]: Fisher-exact threshold search, binarization, p-value filtering
//! - [`forest`]: Gini random forest with depth / split-size limits and grid search
//! - [`evaluation`]: leave-h-out cross-validation, fold ensembles, AUC
//! - [`pipeline`] and [`synth`]: file-based orchestration and a synthetic cohort generator
//!
//! Runnable walkthroughs for each capability live in the crate's `examples/` directory.

pub mod error;
pub mod evaluation;
pub mod forest;
pub mod latent;
pub mod nifti;
pub mod pipeline;
pub mod radiomics;
pub mod seed;
pub mod selection;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
pub use evaluation::{auc, cross_validate, ensemble_predict, kfold_splits, predict_members, repeated_cv, CvConfig, CvEnsemble, EvalReport, FoldPlan, OofScore, SelectionMode};
pub use forest::{fit_forest, predict_forest, ForestModel, ForestParams};
pub use nifti::{derive_regions, parse_nifti, LabelMask, Modality, RegionKind, RegionMask, Volume};
pub use radiomics::{extract_all, FeatureVector, RadiomicsConfig};
pub use selection::{fisher_exact_two_sided, select_and_binarize, SelectionReport, ThresholdRule};
pub use table::FeatureTable;
