//! Geodesic-flow geometry on hyperbolic 3-space: contact and invariant forms
//! on the unit sphere bundle, the frame-bundle coframe calculus, boundary
//! operators at conformal infinity, regularized smoothing operators and the
//! pushforward identity for boundary density pairs, plus truncated zeta
//! arithmetic.

pub mod boundary;
pub mod cutoff;
pub mod exterior_core;
pub mod frame_bundle;
pub mod harmonics;
pub mod hyperboloid;
pub mod invariant_forms;
pub mod pushforward_pipeline;
pub mod qs_radial;
pub mod quadrature;
pub mod sphere_conv;
pub mod verify;
pub mod zeta_series;

pub use boundary::{BoundaryError, BoundaryPoint, Sign, XiCoordinates};
pub use exterior_core::{AlternatingForm, FormError, MatrixSubspace, MinkowskiVector};
pub use frame_bundle::{CommutatorTable, CoframePolynomial, FieldTag, FrameQuadruple};
pub use harmonics::{BoundaryDensity, Density, RealEvaluator, SphereFunction};
pub use hyperboloid::{GeometryError, H3Point, SphereTangent, UnitTangent};
pub use invariant_forms::{SuiteReport, TwoFormKind};
pub use pushforward_pipeline::{BoundaryDensityPair, MainIdentityGrids, MainIdentityReport, PipelineError};
pub use qs_radial::{QsConfig, QsError};
pub use quadrature::SphereGrid;
pub use sphere_conv::{FunkHeckeSpectrum, ZonalKernel};
pub use zeta_series::{ClosedGeodesicRecord, MultiplicityTable, ZetaError};
