//! Print the spatial dimensions flowing through the network for the default
//! configuration and a few reduced widths.

use gaitcnn::layers::ModelConfig;

fn main() {
    for divisor in [1usize, 8, 32, 128] {
        let cfg = ModelConfig::with_scale_divisor(divisor);
        let filters = cfg.scaled_filters().unwrap();
        let chain = cfg.pool_chain().unwrap();
        println!("scale_divisor = {divisor}");
        println!("  input        {:?} x 1", cfg.input_shape);
        let mut dims = (cfg.input_shape.0, cfg.input_shape.1);
        for (stage, ((h, w), f)) in chain.iter().zip(filters).enumerate() {
            println!(
                "  stage {}: conv 3x3 -> {f} maps, pool 2x2/2: ({}, {}) -> ({h}, {w})",
                stage + 1,
                dims.0,
                dims.1
            );
            dims = (*h, *w);
        }
        println!(
            "  flatten      {} values -> dense {} -> dense {}",
            cfg.flattened_len().unwrap(),
            cfg.scaled_dense().unwrap(),
            cfg.classes
        );
        println!();
    }
}
