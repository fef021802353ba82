//! Markov values of periodic orbits for partial quotients {1, 2}, below 3.

use spectra_core::spectra::{enumerate_spectrum, SpectrumKind};
use spectra_core::symbolic::digit_labels;
use spectra_core::{Potential, TransitionSystem};

fn main() -> spectra_core::Result<()> {
    let ts = TransitionSystem::full(digit_labels(&[1, 2]))?;
    let pot = Potential::CfSum { digits: vec![1, 2] };
    let sample = enumerate_spectrum(&ts, &pot, 10, SpectrumKind::Markov)?;
    for e in sample.entries.iter().filter(|e| e.value < 3.0) {
        let w: Vec<String> = e.witnesses.iter().map(|w| ts.format_word(w)).collect();
        println!("{:.10}  {}", e.value, w.join(" "));
    }
    Ok(())
}
