//! Arithmetic invariants of adelic vector bundles over the rationals and of
//! graded linear series on the projective line: degrees, slopes,
//! Harder–Narasimhan filtrations, successive minima, Okounkov bodies,
//! concave transforms and the volume functionals vol, vol_χ and vol_I.

pub mod adelic_curve;
pub mod ample_decomp;
pub mod bundles;
pub mod divisor_series;
pub mod error;
pub mod exact;
pub mod fla;
pub mod lattice;
pub mod norms;
pub mod okounkov;
pub mod volumes;

pub use adelic_curve::{LogValue, Place, PlaceFunction};
pub use bundles::{AdelicBundle, HnConfig, HnFiltration};
pub use error::{Error, Result};
pub use exact::{Q, QMatrix};
pub use norms::{ArchNorm, FiniteNorm, NormFamily};
pub use ample_decomp::{decompose_ample, AmpleDecomposition};
pub use divisor_series::{GradedSeries, GreenModel, Point, Profile, RDivisorP1};
pub use okounkov::{concave_transform, ConcaveTransformApprox, OkounkovData};
pub use volumes::{VolumeEstimate, VolumeKind};
