//! Writes the built-in fixture scenes and a small pipeline config:
//!
//! ```text
//! cargo run -p pbrgen-core --example write_fixtures -- demo
//! cargo run -p pbrgen -- run --config demo/pipeline.toml
//! ```

use std::path::PathBuf;

use pbrgen_core::fixtures::{camera_fixtures, pipeline_fixture};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    let scenes: Vec<_> = camera_fixtures();
    let named: Vec<(&str, _)> = scenes.iter().map(|s| (s.id.as_str(), s.clone())).collect();
    let mut cfg = pipeline_fixture(&dir, &named)?;
    cfg.render.width = 160;
    cfg.render.height = 120;
    cfg.path.spp = 16;
    // Paths in the written config are relative to it.
    cfg.output = "out".into();
    cfg.scenes = cfg.scenes.iter().map(|p| p.strip_prefix(&dir).unwrap_or(p).to_path_buf()).collect();
    let path = dir.join("pipeline.toml");
    std::fs::write(&path, cfg.to_toml())?;
    println!("wrote {} scenes and {}", scenes.len(), path.display());
    Ok(())
}
