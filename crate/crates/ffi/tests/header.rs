//! The generated C header must exist and declare the public surface.

#[test]
fn header_declares_the_abi() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/entanglib.h");
    let text = std::fs::read_to_string(path).expect("header generated at build time");
    for needle in [
        "ENTANGLIB_H",
        "typedef struct EntState EntState;",
        "ent_state_new",
        "ent_state_free",
        "ent_state_dims",
        "ent_state_data",
        "ent_partial_trace",
        "ent_von_neumann_entropy",
        "ent_coherent_information",
        "ent_moment",
        "ent_ree_upper_bound",
        "ent_cglmp_correlations",
        "ent_strerror",
        "ent_version",
        "ENT_ERR_NOT_DENSITY",
    ] {
        assert!(text.contains(needle), "header is missing `{needle}`");
    }
}
