//! The on-disk dataset as a downstream training loader sees it: files are
//! decoded here by hand from the documented layout, not through the crate's
//! own reader.

use std::path::Path;

use fracsynth::fractal::scan_c_catalogue;
use fracsynth::io::read_array;
use fracsynth::pipeline::{generate_dataset, simulate_example, Acquisition, PipelineConfig};
use serde_json::Value;

struct Raw {
    dtype: String,
    shape: Vec<usize>,
    floats: Vec<f32>,
}

fn decode(path: &Path) -> Raw {
    let bytes = std::fs::read(path).unwrap();
    assert_eq!(&bytes[..8], b"FSYN0001");
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let header: Value = serde_json::from_slice(&bytes[12..12 + hlen]).unwrap();
    assert_eq!(header["order"], "row-major");
    let shape: Vec<usize> = header["shape"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    let floats = bytes[12 + hlen..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Raw {
        dtype: header["dtype"].as_str().unwrap().to_owned(),
        shape,
        floats,
    }
}

fn config() -> PipelineConfig {
    PipelineConfig {
        n: 16,
        frames: 4,
        coils_simulated: 6,
        coils_out: 3,
        dataset_size: 5,
        seed: 11,
        ..PipelineConfig::default()
    }
}

#[test]
fn loader_view_matches_in_memory_examples() {
    let cfg = config();
    let cat = scan_c_catalogue(&cfg.scan_grid(), &cfg.iteration, cfg.catalogue_range).unwrap();
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&cfg, &cat, dir.path(), 1, |_| {}).unwrap();

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    let split = &manifest["split"];
    let sizes: Vec<u64> = ["train", "val", "test"]
        .iter()
        .map(|k| split[k].as_u64().unwrap())
        .collect();
    assert_eq!(sizes.iter().sum::<u64>(), 5);
    let records = manifest["examples"].as_array().unwrap();
    assert_eq!(records.len(), 5);

    let acq = Acquisition::new(&cfg);
    for (i, rec) in records.iter().enumerate() {
        assert_eq!(rec["index"].as_u64().unwrap() as usize, i);
        let input = decode(&dir.path().join(rec["files"]["input"].as_str().unwrap()));
        let target = decode(&dir.path().join(rec["files"]["target"].as_str().unwrap()));
        assert_eq!(input.dtype, "c64");
        assert_eq!(input.shape, vec![3, 4, 16, 16]);
        assert_eq!(target.dtype, "f32");
        assert_eq!(target.shape, vec![4, 16, 16]);

        // Real and imaginary parts of each coil become two channels.
        let channels = 2 * input.shape[0];
        assert_eq!(input.floats.len(), channels * 4 * 16 * 16);

        let ex = simulate_example(&cfg, &acq, i, cat.pick(i))
            .unwrap()
            .example;
        for (z, pair) in ex.input.iter().zip(input.floats.chunks_exact(2)) {
            assert_eq!((z.re as f32).to_bits(), pair[0].to_bits());
            assert_eq!((z.im as f32).to_bits(), pair[1].to_bits());
        }
        for (x, y) in ex.target.iter().zip(&target.floats) {
            assert_eq!((*x as f32).to_bits(), y.to_bits());
        }
        assert_eq!(target.floats.iter().cloned().fold(f32::MIN, f32::max), 1.0);
    }
}

#[test]
fn truncated_and_foreign_files_are_rejected() {
    let cfg = PipelineConfig {
        dataset_size: 3,
        ..config()
    };
    let cat = scan_c_catalogue(&cfg.scan_grid(), &cfg.iteration, cfg.catalogue_range).unwrap();
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&cfg, &cat, dir.path(), 1, |_| {}).unwrap();
    let path = dir.path().join("examples/000000/target.arr");
    let bytes = std::fs::read(&path).unwrap();

    std::fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(
        read_array(&path),
        Err(fracsynth::Error::TruncatedPayload { .. })
    ));
    let mut foreign = bytes.clone();
    foreign[0] = b'X';
    std::fs::write(&path, &foreign).unwrap();
    assert!(matches!(read_array(&path), Err(fracsynth::Error::BadMagic)));
}
