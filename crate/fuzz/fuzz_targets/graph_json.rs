#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Whatever validates must survive a serialize/parse round trip intact.
    if let Ok((graph, positions, factors)) = elgraph::io::graph_from_json(text) {
        let emitted =
            elgraph::io::graph_to_json(&graph, positions.as_ref(), factors.as_deref());
        let (graph2, positions2, factors2) =
            elgraph::io::graph_from_json(&emitted).expect("emitted graph json reparses");
        assert_eq!(graph, graph2);
        assert_eq!(positions, positions2);
        assert_eq!(factors, factors2);
    }
});
