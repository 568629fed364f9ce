//! Writes the worked example games to disk.

use anyhow::{bail, Context, Result};
use psg_core::fixtures::{self, Fixture};
use psg_core::pabulib;
use std::path::{Path, PathBuf};

/// Writes `<name>.game.json` and `<name>.expected.json`, plus `<name>.pb`
/// when `pb` is set. Returns the paths written.
pub fn write_fixture(f: &Fixture, dir: &Path, pb: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = vec![
        (dir.join(format!("{}.game.json", f.name)), f.game_json() + "\n"),
        (dir.join(format!("{}.expected.json", f.name)), f.sidecar_json() + "\n"),
    ];
    if pb {
        files.push((dir.join(format!("{}.pb", f.name)), pabulib::election_to_pb(f.game.election(), f.name)));
    }
    for (path, body) in &files {
        std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

pub fn select(name: Option<&str>, all: bool) -> Result<Vec<Fixture>> {
    match (name, all) {
        (_, true) => Ok(fixtures::all()),
        (Some(n), false) => match fixtures::by_name(n) {
            Some(f) => Ok(vec![f]),
            None => bail!("unknown fixture `{n}`; available: {}", fixtures::names().join(", ")),
        },
        (None, false) => bail!("name a fixture or pass --all; available: {}", fixtures::names().join(", ")),
    }
}
