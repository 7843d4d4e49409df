//! Vendored reference data and its refreshed copies in the data directory.

use std::path::PathBuf;

use advertoscope::corpus::{RdapBootstrap, SuffixList};
use anyhow::{bail, Context, Result};

use crate::settings::Settings;

const PSL_FILE: &str = "public_suffix_list.dat";
const BOOTSTRAP_FILE: &str = "rdap_dns.json";

fn write_data(settings: &Settings, name: &str, body: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(&settings.data_dir).with_context(|| format!("creating {}", settings.data_dir.display()))?;
    let path = settings.data_dir.join(name);
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, body).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, &path).with_context(|| format!("replacing {}", path.display()))?;
    Ok(path)
}

pub fn refresh_psl(settings: &Settings) -> Result<()> {
    if settings.run.offline {
        bail!("--refresh-psl needs the network but --offline is set");
    }
    let (list, text) = SuffixList::fetch(settings.transport().as_ref())?;
    let path = write_data(settings, PSL_FILE, &text)?;
    log::info!("public suffix list sha256 {} written to {}", list.sha256(), path.display());
    Ok(())
}

pub fn refresh_rdap_bootstrap(settings: &Settings) -> Result<()> {
    if settings.run.offline {
        bail!("--refresh-rdap-bootstrap needs the network but --offline is set");
    }
    let (boot, text) = RdapBootstrap::fetch(settings.transport().as_ref())?;
    let path = write_data(settings, BOOTSTRAP_FILE, &text)?;
    log::info!(
        "rdap bootstrap {} ({} services) written to {}",
        boot.publication.as_deref().unwrap_or("undated"),
        boot.services.len(),
        path.display()
    );
    Ok(())
}

/// The refreshed list when present, else the embedded snapshot.
pub fn suffix_list(settings: &Settings) -> Result<&'static SuffixList> {
    let path = settings.data_dir.join(PSL_FILE);
    if !path.exists() {
        return Ok(SuffixList::embedded());
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let list = SuffixList::from_dat(&text).with_context(|| path.display().to_string())?;
    Ok(Box::leak(Box::new(list)))
}

pub fn rdap_bootstrap(settings: &Settings) -> Result<RdapBootstrap> {
    let path = settings.data_dir.join(BOOTSTRAP_FILE);
    if !path.exists() {
        return Ok(RdapBootstrap::embedded());
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    RdapBootstrap::from_json(&text).with_context(|| path.display().to_string())
}
