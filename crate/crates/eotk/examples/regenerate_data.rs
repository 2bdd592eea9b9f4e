//! Rewrites the bundled files in `crates/eotk/data/`.

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = eotk::bundled::data_dir();
    std::fs::create_dir_all(&dir)?;
    for (name, text) in eotk::bundled::files()? {
        std::fs::write(dir.join(&name), text)?;
        println!("wrote {}", dir.join(&name).display());
    }
    Ok(())
}
