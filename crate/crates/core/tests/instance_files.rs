use std::fs;
use std::path::PathBuf;

use nswbandit::{parse_instance, BanditInstance};

fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

#[test]
fn shipped_instances_match_builtins() {
    let dir = repo_root().join("instances");
    let read = |name: &str| parse_instance(&fs::read_to_string(dir.join(name)).unwrap()).unwrap();
    assert_eq!(read("benchmark.toml"), BanditInstance::benchmark());
    assert_eq!(read("majority_split.toml"), BanditInstance::majority_split());
    let single = read("single_agent.toml");
    assert_eq!((single.n_agents(), single.n_arms()), (1, 3));
}

#[test]
fn instance_corpus_seeds_parse_or_fail_cleanly() {
    let dir = repo_root().join("fuzz/corpus/parse_instance");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if let Ok(inst) = parse_instance(&text) {
            assert_eq!(parse_instance(&inst.to_toml_string()).unwrap(), inst, "{}", path.display());
        }
        seen += 1;
    }
    assert!(seen >= 3);
}
