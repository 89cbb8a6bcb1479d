//! Every example must run to completion.

macro_rules! example {
    ($name:ident, $file:literal) => {
        #[allow(dead_code)]
        #[path = $file]
        mod $name;
    };
}

example!(coherent_states, "../examples/coherent_states.rs");
example!(cat_states, "../examples/cat_states.rs");
example!(protocol_reductions, "../examples/protocol_reductions.rs");
example!(sensitivity_scan, "../examples/sensitivity_scan.rs");
example!(fringes, "../examples/fringes.rs");
example!(detection_noise, "../examples/detection_noise.rs");
example!(decoherence, "../examples/decoherence.rs");
example!(husimi_export, "../examples/husimi_export.rs");

#[test]
fn all_examples_run() {
    coherent_states::run_example().unwrap();
    cat_states::run_example().unwrap();
    protocol_reductions::run_example().unwrap();
    sensitivity_scan::run_example().unwrap();
    fringes::run_example().unwrap();
    detection_noise::run_example().unwrap();
    decoherence::run_example().unwrap();
    husimi_export::run_example().unwrap();
}
