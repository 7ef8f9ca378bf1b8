//! Finite-dimensional checks for G2 desingularization by gluing: pointwise G2
//! algebra, calculus on cones over homogeneous links, critical rates of
//! homogeneous kernels, and scaling of the gluing torsion estimates.

pub mod cone_calculus;
pub mod exterior;
pub mod g2_pointwise;
pub mod glue_sim;
pub mod link_algebra;
pub mod par;
pub mod rate_analysis;
