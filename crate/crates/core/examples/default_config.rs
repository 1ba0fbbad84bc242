//! Prints the built-in defaults as TOML, a starting point for config files.
//!
//! ```text
//! cargo run --example default_config > my.toml
//! ```

use tddsim::SimConfig;

fn main() {
    print!("{}", SimConfig::default().to_toml_string());
}
