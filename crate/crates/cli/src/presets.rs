//! Shipped run configurations.

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub document: &'static str,
}

macro_rules! preset {
    ($name:literal, $summary:literal) => {
        Preset { name: $name, summary: $summary, document: include_str!(concat!("../presets/", $name, ".cfg")) }
    };
}

pub const PRESETS: [Preset; 7] = [
    preset!("fig1a", "adiabatic fidelity vs time for several bath memory times"),
    preset!("fig1b", "adiabatic fidelity vs time for several squeeze directions"),
    preset!("fig2", "adiabatic fidelity at t = 1.5 vs squeeze strength"),
    preset!("fig3a", "4-site transfer fidelity vs r, sigma_x baths"),
    preset!("fig3b", "4-site transfer fidelity vs r, sigma_z baths"),
    preset!("fig3c", "4-site transfer, sigma_x vs sigma_z baths at r = 0.5"),
    preset!("fig4", "maximum transfer fidelity vs r (vary N with --set N=k)"),
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
