//! The bundled conversion content, embedded at compile time so the CLI and
//! the bench harness work from any directory. The same files live under
//! `assets/` in the repository for direct use.

use std::io;
use std::path::Path;

pub const GTFS_MAPPING: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../assets/mappings/gtfs.cml"));
pub const GTFS_JOIN_MAPPING: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/mappings/gtfs-join.cml"
));
pub const FACILITIES_MAPPING: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/mappings/facilities.cml"
));

pub const MINI_TRANSMODEL_ONTOLOGY: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/ontology/mini-transmodel.nt"
));

/// NeTEx templates in render order; file stems become render parameters for
/// the later templates (`10_resource_frame.gtl` → `resource_frame`).
pub const NETEX_TEMPLATES: &[(&str, &str)] = &[
    (
        "10_resource_frame.gtl",
        include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../assets/templates/netex/10_resource_frame.gtl"
        )),
    ),
    (
        "20_service_frame.gtl",
        include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../assets/templates/netex/20_service_frame.gtl"
        )),
    ),
    (
        "30_timetable_frame.gtl",
        include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../assets/templates/netex/30_timetable_frame.gtl"
        )),
    ),
    (
        "90_publication.gtl",
        include_str!(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../assets/templates/netex/90_publication.gtl"
        )),
    ),
];

pub const MADRID_PIPELINE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/pipelines/madrid.json"
));
pub const MILANO_PIPELINE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/pipelines/milano.json"
));
pub const GENOVA_PIPELINE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/pipelines/genova.json"
));

pub const MINI_GTFS_ZIP: &[u8] = include_bytes!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/fixtures/mini-gtfs.zip"
));
pub const FACILITIES_CSV: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/fixtures/facilities.csv"
));
pub const OPERATORS_EXTRA_NT: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/fixtures/operators-extra.nt"
));
pub const FIXTURE_MANIFEST: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../assets/fixtures/manifest.json"
));

/// Materialize the embedded assets into a directory, reproducing the
/// `assets/` layout. Lets the bench harness and the service run the bundled
/// pipelines without depending on the repository checkout location.
pub fn write_assets_to(dir: &Path) -> io::Result<()> {
    let write = |rel: &str, bytes: &[u8]| -> io::Result<()> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)
    };
    write("mappings/gtfs.cml", GTFS_MAPPING.as_bytes())?;
    write("mappings/gtfs-join.cml", GTFS_JOIN_MAPPING.as_bytes())?;
    write("mappings/facilities.cml", FACILITIES_MAPPING.as_bytes())?;
    write(
        "ontology/mini-transmodel.nt",
        MINI_TRANSMODEL_ONTOLOGY.as_bytes(),
    )?;
    for (name, content) in NETEX_TEMPLATES {
        write(&format!("templates/netex/{name}"), content.as_bytes())?;
    }
    write("pipelines/madrid.json", MADRID_PIPELINE.as_bytes())?;
    write("pipelines/milano.json", MILANO_PIPELINE.as_bytes())?;
    write("pipelines/genova.json", GENOVA_PIPELINE.as_bytes())?;
    write("fixtures/mini-gtfs.zip", MINI_GTFS_ZIP)?;
    write("fixtures/facilities.csv", FACILITIES_CSV.as_bytes())?;
    write("fixtures/operators-extra.nt", OPERATORS_EXTRA_NT.as_bytes())?;
    write("fixtures/manifest.json", FIXTURE_MANIFEST.as_bytes())?;
    Ok(())
}
