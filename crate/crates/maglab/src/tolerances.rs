//! Default residual budgets and numerical steps.
//!
//! Each constant is the default of a configurable parameter; the CLI
//! overrides them from the `[tolerances]` table of a run config.

/// Central-difference step for metric derivatives in FD mode.
pub const METRIC_FD_STEP: f64 = 1e-4;
/// Jacobian step of the finite-difference Lie bracket.
pub const BRACKET_STEP: f64 = 1e-5;
/// Orthonormality drift that triggers polar re-projection of a frame.
pub const FRAME_REPROJECT: f64 = 1e-9;
/// Orthonormality tolerance for constructing a `FramePoint`.
pub const FRAME_VALID: f64 = 1e-10;
/// Displacement of the variation oracle.
pub const JACOBI_FD_EPS: f64 = 1e-5;

/// Structural equations under the bracket oracle.
pub const STRUCTURE: f64 = 1e-4;
/// Closed-form torsion against antisymmetrized contorsion.
pub const TORSION: f64 = 1e-13;
/// Closed-form curvature against the bracket oracle.
pub const CURVATURE_ORACLE: f64 = 1e-4;
/// Bianchi identity with analytic derivatives.
pub const BIANCHI: f64 = 1e-8;
/// Cyclic sum on the Kähler torus.
pub const BIANCHI_KAHLER: f64 = 1e-10;
/// Jacobi ODE against the variation oracle.
pub const JACOBI: f64 = 1e-4;
/// Conjugate time location.
pub const CONJUGATE_TIME: f64 = 1e-4;
/// Pestov identity on a surface.
pub const PESTOV: f64 = 1e-8;
/// Localized Pestov identity.
pub const LOCALIZED: f64 = 1e-8;
/// Orthogonality of the gradient decomposition.
pub const ORTHOGONALITY: f64 = 1e-10;
/// Pinching margin at the threshold.
pub const MARGIN: f64 = 1e-12;
/// Poincaré ratio slack.
pub const POINCARE: f64 = 1e-6;
/// Weak identities on the frame bundle by quadrature.
pub const FM_WEAK: f64 = 1e-3;
