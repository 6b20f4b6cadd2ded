#![no_main]
use c2_core::graph::Graph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = Graph::parse_text(text) {
        let again = Graph::parse_text(&g.to_text()).expect("printed graph parses");
        assert_eq!(again.edges(), g.edges());
        assert_eq!(again.num_vertices(), g.num_vertices());
    }
});
