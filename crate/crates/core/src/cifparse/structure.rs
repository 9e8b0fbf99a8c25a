use super::{parse_symop, CifDocument, CifError, CifValue, SymmetryOp};
use crate::crystal::{wrap_unit, CrystalStructure, Lattice, Site};
use crate::elements;

/// Default site-deduplication tolerance in Å.
pub const DEFAULT_DEDUP_TOL: f64 = 0.01;

const CELL_TAGS: [&str; 6] = [
    "_cell_length_a",
    "_cell_length_b",
    "_cell_length_c",
    "_cell_angle_alpha",
    "_cell_angle_beta",
    "_cell_angle_gamma",
];

const SYMOP_TAGS: [&str; 2] = ["_symmetry_equiv_pos_as_xyz", "_space_group_symop_operation_xyz"];

/// Symmetry operations listed in the document, or identity alone if none are.
pub fn symmetry_ops(doc: &CifDocument) -> Result<Vec<SymmetryOp>, CifError> {
    for tag in SYMOP_TAGS {
        let vals = doc.values(tag);
        if !vals.is_empty() {
            return vals
                .into_iter()
                .filter_map(CifValue::as_str)
                .map(parse_symop)
                .collect();
        }
    }
    Ok(vec![SymmetryOp::identity()])
}

fn number(doc: &CifDocument, tag: &str) -> Result<f64, CifError> {
    let v = doc.item(tag).ok_or_else(|| CifError::MissingTag(tag.to_string()))?;
    v.as_number().ok_or_else(|| CifError::BadNumber { tag: tag.to_string(), value: format!("{v:?}") })
}

/// Expand an atom-site listing into a P1 structure.
///
/// Every symmetry operation is applied to every listed site, coordinates are
/// wrapped into [0, 1), and images of the same element closer than `tol` Å
/// (periodically) to an already-kept site are dropped.
pub fn to_structure(doc: &CifDocument, tol: f64) -> Result<CrystalStructure, CifError> {
    let cell: Vec<f64> = CELL_TAGS.iter().map(|t| number(doc, t)).collect::<Result<_, _>>()?;
    let lattice = Lattice::new(cell[0], cell[1], cell[2], cell[3], cell[4], cell[5])?;

    let sites_loop = doc.find_loop("_atom_site_fract_x").ok_or(CifError::NoSites)?;
    let col = |t: &str| sites_loop.column(t);
    let fx = [col("_atom_site_fract_x"), col("_atom_site_fract_y"), col("_atom_site_fract_z")];
    let [Some(cx), Some(cy), Some(cz)] = fx else {
        return Err(CifError::MissingTag("_atom_site_fract_y/_atom_site_fract_z".into()));
    };
    let label_col = col("_atom_site_type_symbol").or(col("_atom_site_label")).ok_or_else(|| {
        CifError::MissingTag("_atom_site_type_symbol or _atom_site_label".into())
    })?;
    let occ_col = col("_atom_site_occupancy");
    let ops = symmetry_ops(doc)?;

    let mut asym = Vec::new();
    for row in &sites_loop.rows {
        let label = row[label_col].as_str().ok_or_else(|| CifError::UnknownElement(format!("{:?}", row[label_col])))?;
        let z = elements::resolve(label).ok_or_else(|| CifError::UnknownElement(label.to_string()))?;
        let mut f = [0.0; 3];
        for (k, c) in [cx, cy, cz].into_iter().enumerate() {
            f[k] = row[c].as_number().ok_or_else(|| CifError::BadNumber {
                tag: sites_loop.tags[c].clone(),
                value: format!("{:?}", row[c]),
            })?;
        }
        let occupancy = match occ_col.map(|c| &row[c]) {
            None => 1.0,
            Some(v) if v.is_null() => 1.0,
            Some(v) => v.as_number().ok_or_else(|| CifError::BadNumber {
                tag: "_atom_site_occupancy".into(),
                value: format!("{v:?}"),
            })?,
        };
        if !(occupancy > 0.0 && occupancy <= 1.0) {
            return Err(CifError::BadNumber { tag: "_atom_site_occupancy".into(), value: occupancy.to_string() });
        }
        asym.push((z, f, occupancy));
    }
    if asym.is_empty() {
        return Err(CifError::NoSites);
    }

    let mut sites: Vec<Site> = Vec::new();
    for &(z, f, occupancy) in &asym {
        for op in &ops {
            let frac = op.apply(f).map(wrap_unit);
            let dup = sites.iter().any(|s| s.z == z && lattice.periodic_distance(s.frac, frac) < tol);
            if !dup {
                sites.push(Site { z, frac, occupancy });
            }
        }
    }
    Ok(CrystalStructure::new(lattice, sites)?)
}

/// Parse CIF text straight to a structure with the default tolerance.
pub fn parse_structure(text: &str) -> Result<CrystalStructure, CifError> {
    to_structure(&super::parse(text)?, DEFAULT_DEDUP_TOL)
}

/// Minimal P1 CIF for a structure (the tag set `to_structure` reads).
pub fn write_p1(name: &str, s: &CrystalStructure) -> String {
    let l = &s.lattice;
    let mut out = format!("data_{name}\n");
    for (tag, v) in CELL_TAGS.iter().zip([l.a, l.b, l.c, l.alpha, l.beta, l.gamma]) {
        out.push_str(&format!("{tag} {v:.6}\n"));
    }
    out.push_str("_symmetry_space_group_name_H-M 'P 1'\n");
    out.push_str("loop_\n_symmetry_equiv_pos_as_xyz\nx,y,z\n");
    out.push_str("loop_\n_atom_site_label\n_atom_site_type_symbol\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\n_atom_site_occupancy\n");
    for (i, site) in s.sites.iter().enumerate() {
        let sym = elements::symbol(site.z).unwrap_or("X");
        out.push_str(&format!(
            "{sym}{} {sym} {:.6} {:.6} {:.6} {:.4}\n",
            i + 1,
            site.frac[0],
            site.frac[1],
            site.frac[2],
            site.occupancy
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cifparse::parse;

    #[test]
    fn single_carbon() {
        let s = parse_structure(
            "data_c\n_cell_length_a 1\n_cell_length_b 1\n_cell_length_c 1\n_cell_angle_alpha 90\n_cell_angle_beta 90\n_cell_angle_gamma 90\nloop_\n_atom_site_label\n_atom_site_fract_x\n_atom_site_fract_y\n_atom_site_fract_z\nC1 0 0 0\n",
        )
        .unwrap();
        assert_eq!(s.sites.len(), 1);
        assert_eq!(s.sites[0].z, 6);
    }

    #[test]
    fn missing_cell_and_sites() {
        let e = parse_structure("data_c\n_cell_length_a 1\n").unwrap_err();
        assert!(matches!(e, CifError::MissingTag(t) if t == "_cell_length_b"));
        let e = parse_structure(
            "data_c\n_cell_length_a 1\n_cell_length_b 1\n_cell_length_c 1\n_cell_angle_alpha 90\n_cell_angle_beta 90\n_cell_angle_gamma 90\n",
        )
        .unwrap_err();
        assert!(matches!(e, CifError::NoSites));
    }

    #[test]
    fn p1_writer_round_trips() {
        let lat = Lattice::new(3.1, 4.2, 5.3, 90.0, 90.0, 90.0).unwrap();
        let s = CrystalStructure::from_wrapped(lat, [(30u8, [0.1, 0.2, 0.3]), (8, [0.6, 0.7, 0.8])]).unwrap();
        let text = write_p1("t", &s);
        let back = to_structure(&parse(&text).unwrap(), DEFAULT_DEDUP_TOL).unwrap();
        assert_eq!(back.composition(), vec![8, 30]);
        assert!((back.sites[1].frac[2] - 0.8).abs() < 1e-6);
    }
}
