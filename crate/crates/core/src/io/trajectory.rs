//! Trajectory CSV: one row per recorded sample, fixed column order, floats
//! with 12 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::ab::Ab;
use crate::engine::{ClosedLoopRate, Sample, SimState};
use crate::error::{Error, Result};
use crate::ph::{EnergyRate, EnergyState, Hamiltonian};
use crate::plant::GuardFlags;

pub const COLUMNS: [&str; 46] = [
    "t_s",
    "phi_alpha_vs",
    "phi_beta_vs",
    "q_dc_c",
    "zeta_v_vs",
    "zeta_i_alpha_as",
    "zeta_i_beta_as",
    "s_alpha_a",
    "s_beta_a",
    "v_f_alpha_v",
    "v_f_beta_v",
    "v_g_alpha_v",
    "v_g_beta_v",
    "v_ac_alpha_v",
    "v_ac_beta_v",
    "e_alpha_v",
    "e_beta_v",
    "i_f_alpha_a",
    "i_f_beta_a",
    "v_dc_v",
    "i_conv_a",
    "i_load_a",
    "p_load_w",
    "p_star_w",
    "i_f_star_alpha_a",
    "i_f_star_beta_a",
    "e_v_v",
    "e_i_alpha_a",
    "e_i_beta_a",
    "h_line_j",
    "h_dc_j",
    "h_c_j",
    "h_cl_j",
    "supply_w",
    "r_g_loss_w",
    "r_f_loss_w",
    "converter_loss_w",
    "load_power_w",
    "h_tot_rate_w",
    "voltage_damping_w",
    "current_damping_w",
    "controller_inflow_w",
    "h_c_rate_w",
    "h_cl_rate_w",
    "v_dc_pu",
    "flags",
];

fn values(s: &Sample<f64>, v_dc_star: f64) -> [f64; 45] {
    let x = &s.state;
    let r = &s.rates;
    [
        s.t,
        x.energy.phi.alpha,
        x.energy.phi.beta,
        x.energy.q_dc,
        x.energy.zeta_v,
        x.energy.zeta_i.alpha,
        x.energy.zeta_i.beta,
        x.s.alpha,
        x.s.beta,
        x.v_f.alpha,
        x.v_f.beta,
        s.v_g.alpha,
        s.v_g.beta,
        s.v_ac.alpha,
        s.v_ac.beta,
        s.e.alpha,
        s.e.beta,
        s.i_f.alpha,
        s.i_f.beta,
        s.v_dc,
        s.i_conv,
        s.i_load,
        s.p_load,
        s.p_star,
        s.i_f_star.alpha,
        s.i_f_star.beta,
        s.e_v,
        s.e_i.alpha,
        s.e_i.beta,
        s.hamiltonian.line,
        s.hamiltonian.dc,
        s.hamiltonian.controller,
        s.hamiltonian.total,
        r.plant.supply,
        r.plant.r_g_loss,
        r.plant.r_f_loss,
        r.plant.converter_loss,
        r.plant.load_power,
        r.plant.total,
        r.voltage_damping,
        r.current_damping,
        r.controller_inflow,
        r.h_c_rate,
        r.h_cl_rate,
        s.v_dc / v_dc_star,
    ]
}

/// Writes the records; an empty slice gives a header-only file.
pub fn emit_trajectory_csv(records: &[Sample<f64>], v_dc_star: f64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{}", COLUMNS.join(",")).map_err(io)?;
    let mut line = String::with_capacity(16 * COLUMNS.len());
    for s in records {
        line.clear();
        for v in values(s, v_dc_star) {
            line.push_str(&format!("{v:.11e},"));
        }
        line.push_str(&s.flags.bits().to_string());
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads a trajectory written by [`emit_trajectory_csv`].
pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Vec<Sample<f64>>> {
    let path = path.as_ref();
    let err = |row: usize, message: String| Error::Profile {
        path: path.to_path_buf(),
        row,
        message,
    };
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if headers.iter().ne(COLUMNS.iter().copied()) {
        return Err(err(1, "header does not match the trajectory schema".into()));
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec.map_err(|e| err(row, e.to_string()))?;
        let mut v = [0.0; 45];
        for (n, slot) in v.iter_mut().enumerate() {
            *slot = rec[n]
                .parse()
                .map_err(|_| err(row, format!("column {} is not a number", COLUMNS[n])))?;
        }
        let flags: u8 = rec[45].parse().map_err(|_| err(row, "flags is not an integer".into()))?;
        out.push(Sample {
            t: v[0],
            state: SimState {
                energy: EnergyState {
                    phi: Ab::new(v[1], v[2]),
                    q_dc: v[3],
                    zeta_v: v[4],
                    zeta_i: Ab::new(v[5], v[6]),
                },
                s: Ab::new(v[7], v[8]),
                v_f: Ab::new(v[9], v[10]),
            },
            v_g: Ab::new(v[11], v[12]),
            v_ac: Ab::new(v[13], v[14]),
            e: Ab::new(v[15], v[16]),
            i_f: Ab::new(v[17], v[18]),
            v_dc: v[19],
            i_conv: v[20],
            i_load: v[21],
            p_load: v[22],
            p_star: v[23],
            i_f_star: Ab::new(v[24], v[25]),
            e_v: v[26],
            e_i: Ab::new(v[27], v[28]),
            hamiltonian: Hamiltonian {
                line: v[29],
                dc: v[30],
                controller: v[31],
                total: v[32],
            },
            rates: ClosedLoopRate {
                plant: EnergyRate {
                    supply: v[33],
                    r_g_loss: v[34],
                    r_f_loss: v[35],
                    converter_loss: v[36],
                    load_power: v[37],
                    total: v[38],
                },
                voltage_damping: v[39],
                current_damping: v[40],
                controller_inflow: v[41],
                h_c_rate: v[42],
                h_cl_rate: v[43],
            },
            flags: GuardFlags::from_bits(flags),
        });
    }
    Ok(out)
}
