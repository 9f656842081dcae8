use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");

    let mut config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("CHANNEL_METRIC_H".into()),
        cpp_compat: true,
        documentation: true,
        usize_is_size_t: true,
        ..Default::default()
    };
    config.enumeration.rename_variants = cbindgen::RenameRule::ScreamingSnakeCase;
    config.enumeration.prefix_with_name = true;

    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("Unable to generate C bindings")
        .write_to_file(crate_dir.join("include/channel_metric.h"));
}
