//! Generate one synthetic window per class and write its spectrogram PNG
//! (18 pixels wide, one row per frame) to ./spectrograms.

use std::path::Path;

use gaitcnn::spectrogram::export_spectrogram;
use gaitcnn::synthetic;

fn main() {
    let out = Path::new("spectrograms");
    std::fs::create_dir_all(out).unwrap();
    let ds = synthetic::generate_default(1, 42).unwrap();
    for w in &ds.windows {
        let path = out.join(format!("{}.png", w.label.name().replace('.', "_")));
        export_spectrogram(w, &path).unwrap();
        println!("wrote {}", path.display());
    }
}
