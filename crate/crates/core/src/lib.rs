//! Deformed Airy-kernel Fredholm determinants `Q(x,t) = det(1 - K_sigma)`,
//! the KdV solution `u = d^2/dx^2 log Q + x/2t`, the Schrodinger
//! eigenfunction `phi`, and numerical checks of the identities linking them.

pub mod asymptotics;
pub mod error;
pub mod fredholm;
pub mod linalg;
pub mod observables;
pub mod painleve2;
pub mod quadrature;
pub mod residuals;
pub mod sigma;
pub mod specfun;
pub mod stencil;

pub use asymptotics::{classify, Regime, VEstimate, VModel};
pub use error::{Error, ErrorKind, Result};
pub use fredholm::{DiscretizedOperator, ZGrid};
pub use observables::{observe, u_profile, FdScheme, ObservableSet, StencilOrder};
pub use painleve2::{P2Method, P2Solution, TwOracle};
pub use quadrature::{QuadratureRule, Resolution};
pub use residuals::{CheckKind, ResidualReport};

pub use sigma::{DecayConstants, SigmaSpec, SigmaWeight};
pub use specfun::MathConstants;
