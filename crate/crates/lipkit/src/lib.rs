//! Lipschitz functionals on finite pointed metric spaces.
//!
//! The crate makes a family of functional-analytic constructions executable at
//! desk scale:
//!
//! * [`metric`] — finite pointed metric spaces, validation, betweenness and
//!   grid builders that sample normed spaces;
//! * [`lipfunc`] — Lipschitz functionals, their norm, attainment certificates
//!   and McShane extension;
//! * [`freespace`] — the Lipschitz-free space of a finite space, with its norm
//!   computed two independent ways (dual and primal linear programs);
//! * [`bpb`] — the Bishop-Phelps-Bollobas corrector with the sharp `sqrt(2*delta)`
//!   bound, and the iterative refinement loop towards local attainment;
//! * [`ucx`] — uniformly convex `l_p` models, modulus of convexity, slices, and
//!   the full constructive local-directional pipeline;
//! * [`cantor`] — fat Cantor sets and piecewise-linear functions in exact
//!   rational arithmetic, certifying the 1/2 non-density obstruction;
//! * [`density`] — the weak-density construction, its metric-convex extension,
//!   and the c0-type estimate for separately supported functionals;
//! * [`seminorm`] — seminorm norms, attainment equivalences and the
//!   uniform-vs-Lipschitz convergence gap;
//! * [`scenario`] — manifest-driven experiment runner backing the `lipkit` CLI.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod bpb;
pub mod cantor;
pub mod density;
pub mod error;
pub mod freespace;
pub mod lipfunc;
pub mod lp;
pub mod metric;
pub mod model;
pub mod scenario;
pub mod seminorm;
pub mod ucx;

pub use error::LipkitError;
