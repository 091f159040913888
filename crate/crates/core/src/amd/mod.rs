//! Accelerated mirror descent: unconstrained, constrained and higher-order.

mod accelerated;
mod higher_order;
mod oracle;

pub use accelerated::{
    amd_constrained_lyapunov, amd_constrained_step, amd_lyapunov, amd_step,
    amd_unconstrained_lyapunov, amd_unconstrained_step, run_amd, AmdState, AmdVariant,
    AMD_CONSTRAINED_COLUMNS, AMD_UNCONSTRAINED_COLUMNS,
};
pub use higher_order::{
    higher_order_gate, higher_order_lyapunov, higher_order_step, rising_factorial,
    run_higher_order, HigherOrderState, HIGHER_ORDER_COLUMNS,
};
pub use oracle::{
    default_oracle, higher_order_y_oracle, oracle_condition_residual, CubicRegularizedOracle,
    GradientStepOracle, YOracle,
};
