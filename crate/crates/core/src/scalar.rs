//! Floating point abstraction for the distance and risk kernels.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Tolerance for "sums to one" style checks.
    fn mass_tol() -> Self {
        let t = Self::epsilon() * Self::lit(256.0);
        t.max(Self::lit(1e-12))
    }

    /// Pivot / reduced-cost threshold for the simplex.
    fn pivot_eps() -> Self {
        Self::epsilon() * Self::lit(1024.0)
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal fits the scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
