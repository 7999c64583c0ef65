use std::fs;
use std::path::Path;

use teamrep_core::bench::{generate_network, AttachmentModel, SyntheticSpec};
use teamrep_core::error::Error;
use teamrep_core::network::{LabeledNetwork, TeamCatalog};

fn put(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Same graph and skills, compared through node ids.
fn same_by_id(a: &LabeledNetwork, b: &LabeledNetwork) {
    assert_eq!((a.n(), a.m()), (b.n(), b.m()));
    for i in 0..a.n() {
        let j = b.resolve(a.node_id(i)).unwrap();
        for (u, w) in a.neighbors(i) {
            assert_eq!(b.weight(j, b.resolve(a.node_id(u)).unwrap()), w);
        }
        for (k, name) in a.skill_names().iter().enumerate() {
            let kb = b.skill_names().iter().position(|s| s == name);
            let wb = kb.map_or(0.0, |kb| b.skill_row(j)[kb]);
            assert_eq!(a.skill_row(i)[k], wb, "node {} skill {name}", a.node_id(i));
        }
    }
}

#[test]
fn write_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    for model in [AttachmentModel::ErdosRenyi, AttachmentModel::Preferential] {
        let spec = SyntheticSpec {
            model,
            ..SyntheticSpec::erdos_renyi(300, 900, 11)
        };
        let net = generate_network(&spec).unwrap();
        let (e, s) = (dir.path().join("edges.tsv"), dir.path().join("skills.tsv"));
        net.write(&e, &s).unwrap();
        same_by_id(&net, &LabeledNetwork::load(&e, &s).unwrap());
    }
}

#[test]
fn fractional_weights_survive_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let e = put(dir.path(), "e.tsv", "a\tb\t0.1\nb\tc\t0.30000000000000004\nd\td\t0\n");
    let s = put(dir.path(), "s.tsv", "a\trust\t1\nb\tgo\t0.25\nc\trust\t2\nd\trust\t0\n");
    let net = LabeledNetwork::load(&e, &s).unwrap();
    assert_eq!(net.degree(net.resolve("d").unwrap()), 0);
    let (e2, s2) = (dir.path().join("e2.tsv"), dir.path().join("s2.tsv"));
    net.write(&e2, &s2).unwrap();
    same_by_id(&net, &LabeledNetwork::load(&e2, &s2).unwrap());
}

#[test]
fn comments_whitespace_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let e = put(dir.path(), "e.txt", "# header\n\na b 1\r\nb a 2\nb  c  1\n");
    let s = put(dir.path(), "s.txt", "a x 1\nb x 1\nc y 1\n");
    let net = LabeledNetwork::load(&e, &s).unwrap();
    assert_eq!(net.weight(0, 1), 3.0);
    assert_eq!(net.m(), 2);
    let teams = put(dir.path(), "t.tsv", "alpha\ta, b\nbeta\tc\n");
    let catalog = TeamCatalog::load(&teams, &net).unwrap();
    assert_eq!(catalog.get("alpha"), Some(&[0usize, 1][..]));
    assert_eq!(catalog.len(), 2);
}

#[test]
fn malformed_inputs_report_location() {
    let dir = tempfile::tempdir().unwrap();
    let skills = put(dir.path(), "s.tsv", "a\tx\t1\nb\tx\t1\n");
    for (text, line) in [
        ("a\tb\t1\na\tb\n", 2),
        ("a\tb\tlots\n", 1),
        ("a\ta\t1\n", 1),
        ("a\tb\tinf\n", 1),
    ] {
        let e = put(dir.path(), "e.tsv", text);
        match LabeledNetwork::load(&e, &skills) {
            Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    let e = put(dir.path(), "e.tsv", "a\tb\t1\nb\tc\t1\n");
    assert!(matches!(LabeledNetwork::load(&e, &skills), Err(Error::Validation(_))));
    let ghost = put(dir.path(), "g.tsv", "a\tx\t1\nb\tx\t1\nc\tx\t1\nzz\tx\t1\n");
    assert!(matches!(LabeledNetwork::load(&e, &ghost), Err(Error::Reference { .. })));
    assert!(matches!(
        LabeledNetwork::load(dir.path().join("missing"), &skills),
        Err(Error::Io { .. })
    ));
}

#[test]
fn duplicate_team_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let e = put(dir.path(), "e.tsv", "a\tb\t1\n");
    let s = put(dir.path(), "s.tsv", "a\tx\t1\nb\tx\t1\n");
    let net = LabeledNetwork::load(&e, &s).unwrap();
    let teams = put(dir.path(), "t.tsv", "t1\ta,b\nt1\ta\n");
    assert!(matches!(
        TeamCatalog::load(&teams, &net),
        Err(Error::Parse { line: 2, .. })
    ));
    let unknown = put(dir.path(), "u.tsv", "t1\ta,nobody\n");
    assert!(matches!(
        TeamCatalog::load(&unknown, &net),
        Err(Error::Reference { .. })
    ));
}
