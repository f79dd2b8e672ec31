//! Dressed levels, parities and field matrix elements of the two species.

use rabi_chain::spectrum::{DressedSpecies, QrsParams, Species};

fn main() -> rabi_chain::Result<()> {
    for (g, tag) in [(0.6, Species::A), (0.9, Species::B)] {
        // units of ω_r
        let species = DressedSpecies::new(QrsParams::new(0.9, 1.0, g, 40, tag), 4)?;
        let e = species.spectrum.kept_energies();
        println!("species {tag} (g = {g} ω_r)");
        for k in 0..4 {
            println!("  |{k}⟩  E = {:+.4}  parity {:+}", e[k], species.spectrum.parity(k));
        }
        println!("  ω10 = {:.4}  ω21 = {:.4}  ω32 = {:.4}", e[1] - e[0], e[2] - e[1], e[3] - e[2]);
        println!("  χ = ⟨k|(a+a†)|j⟩:\n{:.4}", species.elements.chi);
    }
    Ok(())
}
