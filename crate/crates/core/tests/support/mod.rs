pub mod cycle_oracle;
