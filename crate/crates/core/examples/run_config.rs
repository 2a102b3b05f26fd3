//! The command-line runs, driven from code: parse a config, run a few
//! subcommands and list their artifacts.

use bclab::experiment::{run, Command, ExperimentConfig};

fn main() -> bclab::Result<()> {
    let out = std::env::temp_dir().join("bclab-run-config");
    let config = ExperimentConfig::parse("T = 0.3\ntarget = centre_bump\nalphas = 1e-2,1e-4,1e-6\n", None)?;
    for cmd in [Command::Eikonal, Command::Beta, Command::Control, Command::Verify] {
        let r = run(cmd, &config.clone().with_out_dir(out.join(cmd.name())))?;
        println!("{cmd}: passed = {}, artifacts {:?}", r.passed, r.artifacts);
        if let Some(v) = r.verify {
            for item in v.failures() {
                println!("  failing: {}.{} = {:e}", item.suite, item.name, item.measured);
            }
        }
    }
    println!("written under {}", out.display());
    Ok(())
}
