mod bandpass_envelope {
    include!("../examples/bandpass_envelope.rs");
}
mod activation_segmentation {
    include!("../examples/activation_segmentation.rs");
}
mod coherence_spectrum {
    include!("../examples/coherence_spectrum.rs");
}
mod synthetic_oracle {
    include!("../examples/synthetic_oracle.rs");
}
mod svm_xor {
    include!("../examples/svm_xor.rs");
}
mod dataset_roundtrip {
    include!("../examples/dataset_roundtrip.rs");
}

#[test]
fn quick_examples_run() {
    bandpass_envelope::main().unwrap();
    activation_segmentation::main().unwrap();
    coherence_spectrum::main().unwrap();
    synthetic_oracle::main().unwrap();
    svm_xor::main().unwrap();
    dataset_roundtrip::main().unwrap();
}
