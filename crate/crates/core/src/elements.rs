//! Periodic table lookups for atomic numbers 1–103.

/// Highest atomic number the crate resolves.
pub const MAX_Z: u8 = 103;

const SYMBOLS: [&str; 103] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga",
    "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd",
    "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm",
    "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os",
    "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa",
    "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr",
];

const NAMES: [&str; 103] = [
    "hydrogen", "helium", "lithium", "beryllium", "boron", "carbon", "nitrogen", "oxygen",
    "fluorine", "neon", "sodium", "magnesium", "aluminium", "silicon", "phosphorus", "sulfur",
    "chlorine", "argon", "potassium", "calcium", "scandium", "titanium", "vanadium",
    "chromium", "manganese", "iron", "cobalt", "nickel", "copper", "zinc", "gallium",
    "germanium", "arsenic", "selenium", "bromine", "krypton", "rubidium", "strontium",
    "yttrium", "zirconium", "niobium", "molybdenum", "technetium", "ruthenium", "rhodium",
    "palladium", "silver", "cadmium", "indium", "tin", "antimony", "tellurium", "iodine",
    "xenon", "caesium", "barium", "lanthanum", "cerium", "praseodymium", "neodymium",
    "promethium", "samarium", "europium", "gadolinium", "terbium", "dysprosium", "holmium",
    "erbium", "thulium", "ytterbium", "lutetium", "hafnium", "tantalum", "tungsten", "rhenium",
    "osmium", "iridium", "platinum", "gold", "mercury", "thallium", "lead", "bismuth",
    "polonium", "astatine", "radon", "francium", "radium", "actinium", "thorium",
    "protactinium", "uranium", "neptunium", "plutonium", "americium", "curium", "berkelium",
    "californium", "einsteinium", "fermium", "mendelevium", "nobelium", "lawrencium",
];

/// Chemical symbol for atomic number `z`.
pub fn symbol(z: u8) -> Option<&'static str> {
    SYMBOLS.get((z as usize).checked_sub(1)?).copied()
}

/// Lowercase English name for atomic number `z`.
pub fn name(z: u8) -> Option<&'static str> {
    NAMES.get((z as usize).checked_sub(1)?).copied()
}

/// Exact symbol lookup (case-sensitive).
pub fn atomic_number(symbol: &str) -> Option<u8> {
    SYMBOLS.iter().position(|&s| s == symbol).map(|i| i as u8 + 1)
}

/// Resolve a CIF type symbol or site label to an atomic number.
///
/// Leading alphabetic characters are taken (so `Zn2+`, `O1`, `Fe3` resolve),
/// case-normalized to `Xx`, and matched two letters first, then one.
pub fn resolve(label: &str) -> Option<u8> {
    let letters: Vec<char> = label.trim().chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    let first = letters.first()?.to_ascii_uppercase();
    if let Some(&second) = letters.get(1) {
        let two: String = [first, second.to_ascii_lowercase()].iter().collect();
        if let Some(z) = atomic_number(&two) {
            return Some(z);
        }
    }
    atomic_number(&first.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookups() {
        assert_eq!(atomic_number("C"), Some(6));
        assert_eq!(atomic_number("Lr"), Some(103));
        assert_eq!(symbol(30), Some("Zn"));
        assert_eq!(name(8), Some("oxygen"));
        assert_eq!(symbol(0), None);
        assert_eq!(symbol(104), None);
    }

    #[test]
    fn resolve_cif_labels() {
        assert_eq!(resolve("Zn2+"), Some(30));
        assert_eq!(resolve("ZN"), Some(30));
        assert_eq!(resolve("O1"), Some(8));
        assert_eq!(resolve("cl-"), Some(17));
        assert_eq!(resolve("Na1"), Some(11));
        assert_eq!(resolve("Xq"), None);
        assert_eq!(resolve("12"), None);
    }
}
