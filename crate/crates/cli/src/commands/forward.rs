//! `forward`: run the seeded toy network on a PPM image and write the
//! saliency map as a PGM. Identical seed and input reproduce the file
//! byte for byte.

use std::path::Path;

use sodkit::cfdn::{network_forward, SaliencyNetwork, ToyNetworkConfig};
use sodkit::tensor::UpsampleKind;

use super::{EXIT_OK, EXIT_USAGE};
use crate::pnm;

pub fn run(image_path: &Path, seed: u64, upsample: UpsampleKind, out: &Path) -> i32 {
    let image = match pnm::read_ppm(image_path) {
        Ok(img) => img,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if image.height % 32 != 0 || image.width % 32 != 0 {
        eprintln!(
            "error: {}: image is {}x{}, both dimensions must be divisible by 32",
            image_path.display(),
            image.width,
            image.height
        );
        return EXIT_USAGE;
    }

    let cfg = ToyNetworkConfig {
        seed,
        upsample,
        ..ToyNetworkConfig::default()
    };
    let net = match SaliencyNetwork::new(&cfg) {
        Ok(net) => net,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let map = match network_forward(&pnm::to_tensor(&image), &net) {
        Ok(map) => map,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };

    let gray = pnm::from_values(map.height(), map.width(), map.values());
    if let Err(e) = pnm::write_pgm(out, &gray) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    println!(
        "forward: seed {seed}, {}x{} -> {}",
        map.width(),
        map.height(),
        out.display()
    );
    EXIT_OK
}
