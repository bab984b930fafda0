//! Drive a run from a TOML experiment description, as the command-line tool does.

use wbp::experiment::{run_experiment, Command, ExperimentConfig};

const CONFIG: &str = r#"
seed = 12
workers = 1
output_dir = "target/example-run"

[model]
n = "constant(1)"
q = "pareto(2,1)"
c = "constant(0.5)"

[theory]
finite_n = 5
"#;

fn main() -> wbp::Result<()> {
    let cfg = ExperimentConfig::from_toml_str(CONFIG)?;
    let out = run_experiment(&cfg, Command::Theory)?;
    print!("{}", out.report);
    for (k, v) in out.summary.numbers() {
        println!("{k} = {v}");
    }
    Ok(())
}
