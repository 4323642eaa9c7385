pub mod bound_check;
pub mod gp_samples;
pub mod hs_convergence;
pub mod kernel_learn;
pub mod matrix_prior;
