use std::fs;
use std::path::{Path, PathBuf};

use webplate::bench::{find_case, read_csv, registry, write_csv, CaseConfig};

fn repo_dir(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    out.sort();
    out
}

#[test]
fn shipped_configs_match_registry() {
    let dir = repo_dir("../../configs");
    let shipped = files(&dir, "toml");
    assert_eq!(shipped.len(), registry().len());
    for path in shipped {
        let cfg = CaseConfig::load(&path).unwrap();
        assert_eq!(path.file_stem().unwrap().to_str().unwrap(), cfg.case);
        assert_eq!(find_case(&cfg.case).as_ref(), Some(&cfg), "{}", path.display());
    }
}

#[test]
fn config_seeds_round_trip() {
    let seeds = files(&repo_dir("fuzz/corpus/config_parse"), "toml");
    assert!(!seeds.is_empty());
    for path in seeds {
        let cfg = CaseConfig::from_toml(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(CaseConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

#[test]
fn csv_seeds_round_trip() {
    let seeds = files(&repo_dir("fuzz/corpus/csv_reload"), "csv");
    assert!(!seeds.is_empty());
    for path in seeds {
        let (header, rows) = read_csv(fs::File::open(&path).unwrap()).unwrap();
        let names: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut buf = Vec::new();
        write_csv(&mut buf, &names, &rows).unwrap();
        let (h2, r2) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(h2, header);
        for (a, b) in rows.iter().zip(&r2) {
            for (x, y) in a.iter().zip(b) {
                assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()), "{}", path.display());
            }
        }
    }
}

#[test]
fn malformed_configs_are_rejected() {
    let good = find_case("annular-bend").unwrap().to_toml();
    for bad in [
        good.replace("p = 3", "p = 1"),
        good.replace("h = 0.1", "h = -0.1"),
        good.replace("[material]", "[material]\ncolour = 1"),
        good.replace("shape = \"circle\"", "shape = \"ellipse\""),
        String::new(),
    ] {
        assert!(CaseConfig::from_toml(&bad).is_err(), "{bad}");
    }
}
