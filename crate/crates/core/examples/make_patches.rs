//! Writes a labelled texture-patch set for `wxrclean texture-train`.
//!
//! Usage: `cargo run -p wxrclean-core --example make_patches -- <dir> [seed]`
//!
//! Artifact patches carry thin bright lines and speckle; precipitation
//! patches carry smooth blobs. File names encode the class, the convention
//! `texture-train` expects.

use std::path::Path;

use wxrclean_core::io::write_frame;
use wxrclean_core::{synth_texture_patches, TextureClass};

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = args.next().unwrap_or_else(|| {
        eprintln!("usage: make_patches <dir> [seed]");
        std::process::exit(2);
    });
    let seed: u64 = args.next().map(|s| s.parse().expect("seed must be an integer")).unwrap_or(424242);
    let dir = Path::new(&dir);
    std::fs::create_dir_all(dir).expect("patch directory");
    let patches = synth_texture_patches(seed, 6, 6, 21).expect("patch generation");
    let (mut artifact, mut precipitation) = (0, 0);
    for (frame, class) in &patches {
        let name = match class {
            TextureClass::Artifact => {
                artifact += 1;
                format!("artifact_{artifact:02}.wxr")
            }
            TextureClass::Precipitation => {
                precipitation += 1;
                format!("precipitation_{precipitation:02}.wxr")
            }
        };
        write_frame(frame, &dir.join(name)).expect("patch write");
    }
    println!("wrote {artifact} artifact and {precipitation} precipitation patches to {}", dir.display());
}
