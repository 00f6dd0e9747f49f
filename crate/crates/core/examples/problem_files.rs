//! Loads the bundled problem files and runs the CLI pipeline on each.

use std::path::Path;

use ampere2d::cli::{run, Command, RunConfig};

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/problems");
    let out = std::env::temp_dir().join("ampere2d-problem-files");
    let _ = std::fs::create_dir_all(&out);
    for (file, cmd) in [("angular.toml", Command::SolveGlobal), ("exterior.toml", Command::SolveExterior), ("anisotropic.json", Command::OracleCompare)] {
        let rc = RunConfig::new(cmd, dir.join(file).to_string_lossy(), out.join(file.replace('.', "-")));
        let o = run(&rc);
        println!("{file}: exit {} - {}", o.exit_code, o.message);
        if let Some(d) = o.out_dir {
            println!("    {} -> {}", o.artifacts.join(", "), d.display());
        }
    }
}
