#![allow(dead_code)]

use std::path::Path;

use vibronic::config::RunConfig;

/// Small one-mode run that exercises every stage in well under a second.
pub fn tiny_toml(out: &Path) -> String {
    format!(
        r#"
name = "tiny"
n_states = 6
seed = 7

[model]
e1 = 9.45
e2 = 9.85
omega_x = 0.2578
omega_y = 0.0913
kappa1 = -0.2121
kappa2 = 0.2546
lambda = 0.05
coupling = "constant_lambda"

[grid]
axes = [{{ q_min = -8.0, q_max = 8.0, n_points = 96 }}]

[verification]
max_state = 2

[reference]
states = {{ diabatic_lambda_zero = 6, adiabatic = 6, born_huang = 6 }}

[single_surface]
states = 4

[overlaps]
pairs = ["adiabatic:exact", "modulus_adiabatic:amplitude", "single_surface:exact"]

[convergence]
factor = 2
states = 4

[output]
dir = "{}"
field_states = 2
"#,
        out.display()
    )
}

pub fn tiny(out: &Path) -> RunConfig {
    RunConfig::from_toml(&tiny_toml(out)).unwrap()
}
