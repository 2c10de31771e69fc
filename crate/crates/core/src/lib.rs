//! Calderón-type spaces `C^p_alpha(S)` and Besov spaces `B^{p,q}_alpha(S)`
//! on discretized Ahlfors regular sets, with executable checks of the
//! inequalities relating them.

pub mod config;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod gridfn;
pub mod measure;
pub mod norms;
pub mod maximal;
pub mod polyapprox;
pub mod report;
pub mod verify;

pub use error::{FrakError, Result};
pub use geometry::{dyadic_net, dyadic_net_for, restrict, Cube, Net, Restriction};
pub use gridfn::GridFunction;
pub use measure::{
    ahlfors_constants, build_cloud, build_cloud_with_cap, builtin, moran_dimension, AhlforsReport,
    IfsSpec, SimilarityMap, WeightedPointCloud,
};
pub use polyapprox::{
    apply_projector, basis_size, best_approx, make_projector, reverse_holder_ratio, ApproxResult,
    Polynomial, Projector,
};
pub use maximal::{
    degree_for_flat, degree_for_sharp, hl_maximal, sharp_maximal, ScaleGrid, ScaleWindow,
    SharpMaximal, Variant,
};
pub use norms::{
    besov_net_norm, besov_norm, calderon_norm, lp_norm, norm_report, BesovNorm, CalderonNorm,
    profile_slope, NetNorm, NormParams, NormReport, ScaleTerm,
};
pub use functions::{battery, battery_table, sample, TestFunction};
pub use config::{CheckConfig, GeneratorConfig, RunConfig};
pub use verify::{all_pass, run_all, CheckKind, CheckResult, Lab, Witness};
pub use report::{norm_sweep, norms_csv, verdict_text, verify_csv, NormRow, SCHEMA_HEADER};
