//! Discrete-time marked Hawkes process: simulation, law-of-large-numbers and
//! central-limit constants, limiting cumulant generating functions and the
//! large-deviation rate functions of `N_t` (event count) and `L_t` (mark sum).
//!
//! The guide in `book/` walks through each piece; its Rust snippets run as
//! doctests of this crate.
//!
//! ```
//! use hawkes_ldp::cgf::{critical_point_n, gamma_n};
//! use hawkes_ldp::kernel::ExcitationKernel;
//! use hawkes_ldp::marks::MarkDistribution;
//! use hawkes_ldp::process::ProcessParams;
//! use hawkes_ldp::rate::rate_n;
//!
//! let p = ProcessParams::new(
//!     1.0,
//!     ExcitationKernel::explicit(vec![0.5])?,
//!     MarkDistribution::exponential(4.0)?,
//! )?;
//! let cp = critical_point_n(&p)?;
//! assert!(cp.theta_c > 0.0);
//! assert_eq!(gamma_n(&p, 0.0)?.gamma, 0.0);
//! assert!(rate_n(&p, 2.0)?.rate > 0.0);
//! # Ok::<(), hawkes_ldp::Error>(())
//! ```

pub mod cgf;
pub mod cli;
pub mod config;
pub mod error;
pub mod format;
pub mod kernel;
pub mod marks;
pub mod mc;
pub mod moments;
pub mod process;
pub mod rate;
pub mod rng;
mod roots;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/limits.md")]
    mod limits {}
    #[doc = include_str!("../../../book/src/cgf.md")]
    mod cgf {}
    #[doc = include_str!("../../../book/src/rate.md")]
    mod rate {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
