//! Drive the experiment runner from a TOML config, as the CLI does.

use dunkl_besov::config::ExperimentConfig;
use dunkl_besov::experiments;

const CONFIG: &str = r#"
seed = 7
out_dir = "OUT/out"
cache_dir = "OUT/cache"
experiments = ["kernels-check", "besov-norm"]

[structure]
kappa = [1.0]

[domain]
half_width = 48.0
nodes = 3072
order = 2

[scales]
k_min = -2
k_max = 2
m0 = 2

[[besov]]
alpha = 0.3
p = 2.0
q = 2.0

[settings]
samples = 5
"#;

fn main() -> dunkl_besov::Result<()> {
    let root = std::env::temp_dir().join("dunkl-besov-run-example");
    let cfg = ExperimentConfig::from_toml(&CONFIG.replace("OUT", &root.display().to_string()))?;
    let report = experiments::run(&cfg)?;
    for e in &report.experiments {
        println!("{} ok={} {:?}", e.name, e.ok, e.metrics);
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
