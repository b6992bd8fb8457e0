use std::collections::BTreeMap;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use siting::agents::{agent1_breakdown, Agent1Breakdown, EvalOptions, Evaluation, Situation};
use siting::compromise::{
    compromise_select, select_from_residuals, CompromiseOptions, Normalize, PayoffMatrix, Selection,
};
use siting::costflow::demand_summary;
use siting::production::plant_net_profit;
use siting::scenario::Scenario;

pub const AGENTS: [&str; 3] = ["agent 1", "agent 2", "agent 3"];

/// Two decimals, without a negative sign on zero.
pub fn fmt_money(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Plain text table; columns holding only numbers are right-aligned.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (k, cell) in r.iter().enumerate() {
                width[k] = width[k].max(cell.chars().count());
            }
        }
        let numeric: Vec<bool> = (0..cols)
            .map(|k| {
                k > 0
                    && self.rows.iter().all(|r| {
                        r.get(k)
                            .is_some_and(|c| c == "-" || c.parse::<f64>().is_ok())
                    })
            })
            .collect();
        let mut out = String::new();
        for r in std::iter::once(&self.header).chain(&self.rows) {
            let mut line = String::new();
            for (k, cell) in r.iter().enumerate() {
                if k > 0 {
                    line.push_str("  ");
                }
                if numeric[k] {
                    line.push_str(&format!("{cell:>w$}", w = width[k]));
                } else {
                    line.push_str(&format!("{cell:<w$}", w = width[k]));
                }
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        out
    }
}

/// Literal table for `solve --matrix`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub labels: Vec<String>,
    #[serde(default)]
    pub agents: Vec<String>,
    pub payoffs: Option<Vec<Vec<f64>>>,
    pub residuals: Option<Vec<Vec<f64>>>,
    pub reference: Option<MatrixReference>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixReference {
    pub label: String,
    #[serde(default)]
    pub note: String,
}

#[derive(Serialize)]
pub struct ScenarioDigest {
    pub name: Option<String>,
    pub nodes: usize,
    pub edges: usize,
    pub raws: Vec<String>,
    pub products: Vec<String>,
    pub plant_candidates: Vec<String>,
    pub total_demand: BTreeMap<String, u64>,
    pub raw_requirements: BTreeMap<String, f64>,
}

#[derive(Serialize)]
pub struct Payoffs {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
}

#[derive(Serialize)]
pub struct LineReport {
    pub plant: String,
    pub product: String,
    pub factor: f64,
    pub quantity: u64,
    pub input_cost: f64,
    pub output_value: f64,
    pub unit_value: f64,
    pub net_profit: f64,
}

#[derive(Serialize)]
pub struct ShipmentReport {
    pub product: String,
    pub plant: String,
    pub warehouse: String,
    pub store: String,
    pub units: u64,
    pub unit_cost: f64,
}

#[derive(Serialize)]
pub struct Details {
    pub plant_lines: Vec<LineReport>,
    pub shipments: Vec<ShipmentReport>,
}

#[derive(Serialize)]
pub struct SituationReport {
    pub label: String,
    pub plants: Vec<String>,
    /// Raw warehouse serving each plant.
    pub raw_warehouses: BTreeMap<String, String>,
    pub product_warehouses: Vec<String>,
    pub transport_cost: f64,
    pub payoffs: Payoffs,
    pub agent1: Agent1Breakdown,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Details>,
}

#[derive(Serialize)]
pub struct SkippedReport {
    pub label: String,
    pub reason: String,
}

#[derive(Serialize)]
pub struct TraceReport {
    /// 1 is the largest residual, 2 the next, and so on.
    pub rank: usize,
    pub value: f64,
    pub survivors: Vec<String>,
}

#[derive(Serialize)]
pub struct SelectionReport {
    pub selected: Vec<String>,
    pub deciding_value: f64,
    pub trace: Vec<TraceReport>,
}

#[derive(Serialize)]
pub struct OptionsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warehouse_selection: Option<String>,
    pub normalize: String,
    pub tie_quantum: f64,
}

#[derive(Serialize)]
pub struct SolveReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioDigest>,
    pub options: OptionsReport,
    pub labels: Vec<String>,
    pub agents: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub situations: Vec<SituationReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoffs: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal: Option<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
    /// Residuals actually compared, when normalization rescaled them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scored_residuals: Option<Vec<Vec<f64>>>,
    /// Each situation's residuals in ascending order, one list per situation.
    pub sorted_residuals: Vec<Vec<f64>>,
    pub selection: SelectionReport,
    pub notes: Vec<String>,
}

fn selection_report(sel: &Selection, labels: &[String]) -> SelectionReport {
    let names = |idx: &[usize]| idx.iter().map(|&j| labels[j].clone()).collect::<Vec<_>>();
    SelectionReport {
        selected: names(&sel.selected),
        deciding_value: sel.deciding_value(),
        trace: sel
            .trace
            .iter()
            .map(|t| TraceReport {
                rank: t.rank + 1,
                value: t.value,
                survivors: names(&t.survivors),
            })
            .collect(),
    }
}

/// A note when a published reference answer differs from the selection.
fn reference_note(
    reference: &str,
    note: &str,
    labels: &[String],
    sel: &Selection,
) -> Option<String> {
    let picked: Vec<&str> = sel.selected.iter().map(|&j| labels[j].as_str()).collect();
    if picked.contains(&reference) {
        return None;
    }
    let mut text = format!(
        "reference selection {reference} differs from the minmax selection {} (largest residual {})",
        picked.join(", "),
        fmt_money(sel.deciding_value())
    );
    if let Some(j) = labels.iter().position(|l| l == reference) {
        let worst = sel.sorted_columns[j].last().copied().unwrap_or(f64::NAN);
        text.push_str(&format!(
            "; {reference} has largest residual {}",
            fmt_money(worst)
        ));
    }
    if !note.is_empty() {
        text.push_str(&format!("; {note}"));
    }
    Some(text)
}

fn details(s: &Scenario, sit: &Situation) -> Details {
    let label = |n: usize| s.label(n).to_string();
    Details {
        plant_lines: sit
            .economics(s)
            .iter()
            .map(|e| LineReport {
                plant: label(e.plant),
                product: s.commodity_name(e.product).to_string(),
                factor: e.factor,
                quantity: e.quantity,
                input_cost: e.input_cost,
                output_value: e.output_value,
                unit_value: e.unit_value,
                net_profit: plant_net_profit(e),
            })
            .collect(),
        shipments: sit
            .flow
            .shipments
            .iter()
            .map(|sh| ShipmentReport {
                product: s.commodity_name(sh.product).to_string(),
                plant: label(sh.plant),
                warehouse: label(sh.warehouse),
                store: label(sh.store),
                units: sh.units,
                unit_cost: sh.unit_cost,
            })
            .collect(),
    }
}

impl SolveReport {
    pub fn from_evaluation(
        s: &Scenario,
        ev: &Evaluation,
        eval: &EvalOptions,
        options: &CompromiseOptions,
        with_details: bool,
    ) -> Result<Self> {
        let result = compromise_select(&ev.matrix, options)?;
        let labels = ev.matrix.labels().to_vec();
        let summary = demand_summary(s)?;
        let names = |ids: &[usize]| {
            ids.iter()
                .map(|&n| s.label(n).to_string())
                .collect::<Vec<_>>()
        };
        let digest = ScenarioDigest {
            name: s.name().map(str::to_string),
            nodes: s.network().node_count(),
            edges: s.network().edges().len(),
            raws: s
                .raws()
                .iter()
                .map(|&c| s.commodity_name(c).to_string())
                .collect(),
            products: s
                .products()
                .iter()
                .map(|&c| s.commodity_name(c).to_string())
                .collect(),
            plant_candidates: names(&s.sites().plants),
            total_demand: summary
                .total_per_product
                .iter()
                .map(|(&c, &q)| (s.commodity_name(c).to_string(), q))
                .collect(),
            raw_requirements: summary
                .total_raw_required
                .iter()
                .map(|(&c, &q)| (s.commodity_name(c).to_string(), q))
                .collect(),
        };
        let mut situations = Vec::new();
        for (sit, p) in ev.situations.iter().zip(&ev.payoffs) {
            situations.push(SituationReport {
                label: sit.label(s),
                plants: names(&sit.plants),
                raw_warehouses: sit
                    .plants
                    .iter()
                    .zip(&sit.raw_warehouses)
                    .map(|(&p, &w)| (s.label(p).to_string(), s.label(w).to_string()))
                    .collect(),
                product_warehouses: names(&sit.product_warehouses),
                transport_cost: sit.flow.total_transport_cost,
                payoffs: Payoffs {
                    p1: p.p1,
                    p2: p.p2,
                    p3: p.p3,
                },
                agent1: agent1_breakdown(s, sit)?,
                details: with_details.then(|| details(s, sit)),
            });
        }
        let mut notes = Vec::new();
        if let Some(r) = s.reference_selection() {
            let label = format!("({})", names(&r.plants).join(","));
            notes.extend(reference_note(&label, &r.note, &labels, &result.selection));
        }
        for k in &ev.skipped {
            notes.push(format!("skipped {}: {}", k.label, k.reason));
        }
        Ok(Self {
            scenario: Some(digest),
            options: OptionsReport {
                warehouse_selection: Some(eval.warehouse_selection.to_string()),
                normalize: options.normalize.to_string(),
                tie_quantum: options.quantum,
            },
            selection: selection_report(&result.selection, &labels),
            labels,
            agents: AGENTS.iter().map(|a| a.to_string()).collect(),
            situations,
            skipped: ev
                .skipped
                .iter()
                .map(|k| SkippedReport {
                    label: k.label.clone(),
                    reason: k.reason.clone(),
                })
                .collect(),
            payoffs: Some(ev.matrix.values().to_vec()),
            ideal: Some(result.ideal),
            scored_residuals: (options.normalize != Normalize::None).then_some(result.scored),
            residuals: result.residuals,
            sorted_residuals: result.selection.sorted_columns,
            notes,
        })
    }

    pub fn from_matrix_file(
        file: &MatrixFile,
        scenario: Option<&Scenario>,
        options: &CompromiseOptions,
    ) -> Result<Self> {
        let labels = file.labels.clone();
        let (payoffs, ideal, residuals, scored, selection) = match (&file.payoffs, &file.residuals)
        {
            (Some(p), None) => {
                let matrix = PayoffMatrix::new(p.clone(), labels.clone())?;
                let r = compromise_select(&matrix, options)?;
                let scored = (options.normalize != Normalize::None).then_some(r.scored);
                (
                    Some(p.clone()),
                    Some(r.ideal),
                    r.residuals,
                    scored,
                    r.selection,
                )
            }
            (None, Some(r)) => {
                if options.normalize != Normalize::None {
                    bail!(siting::Error::Invalid(
                        "normalization needs payoffs, the matrix file holds residuals".into()
                    ));
                }
                if r.first().map_or(0, Vec::len) != labels.len() {
                    bail!(siting::Error::Invalid(format!(
                        "{} labels for {} residual columns",
                        labels.len(),
                        r.first().map_or(0, Vec::len)
                    )));
                }
                let sel = select_from_residuals(r, options.quantum)?;
                (None, None, r.clone(), None, sel)
            }
            _ => bail!(siting::Error::Invalid(
                "matrix file needs exactly one of `payoffs` and `residuals`".into()
            )),
        };
        let agents = if file.agents.is_empty() {
            (1..=residuals.len())
                .map(|i| format!("agent {i}"))
                .collect()
        } else if file.agents.len() == residuals.len() {
            file.agents.clone()
        } else {
            bail!(siting::Error::Invalid(format!(
                "{} agent names for {} rows",
                file.agents.len(),
                residuals.len()
            )));
        };
        let mut notes = Vec::new();
        let reference = file
            .reference
            .as_ref()
            .map(|r| (r.label.clone(), r.note.clone()))
            .or_else(|| {
                scenario.and_then(|s| s.reference_selection()).map(|r| {
                    let names: Vec<&str> = r
                        .plants
                        .iter()
                        .map(|&n| scenario.unwrap().label(n))
                        .collect();
                    (format!("({})", names.join(",")), r.note.clone())
                })
            });
        if let Some((label, note)) = reference {
            notes.extend(reference_note(&label, &note, &labels, &selection));
        }
        Ok(Self {
            scenario: None,
            options: OptionsReport {
                warehouse_selection: None,
                normalize: options.normalize.to_string(),
                tie_quantum: options.quantum,
            },
            selection: selection_report(&selection, &labels),
            labels,
            agents,
            situations: Vec::new(),
            skipped: Vec::new(),
            payoffs,
            ideal,
            residuals,
            scored_residuals: scored,
            sorted_residuals: selection.sorted_columns,
            notes,
        })
    }

    fn matrix_table(&self, rows: &[Vec<f64>]) -> String {
        let mut t = Table::new(
            std::iter::once(String::new())
                .chain(self.labels.iter().cloned())
                .collect(),
        );
        for (name, row) in self.agents.iter().zip(rows) {
            t.row(
                std::iter::once(name.clone())
                    .chain(row.iter().map(|&v| fmt_money(v)))
                    .collect(),
            );
        }
        t.render()
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        if let Some(d) = &self.scenario {
            out.push_str(&format!(
                "Scenario: {}\n",
                d.name.as_deref().unwrap_or("(unnamed)")
            ));
            out.push_str(&format!(
                "  {} nodes, {} arcs, raws {}, products {}\n",
                d.nodes,
                d.edges,
                d.raws.join(" "),
                d.products.join(" ")
            ));
            out.push_str(&format!(
                "  plant candidates: {}\n",
                d.plant_candidates.join(" ")
            ));
            let demand: Vec<String> = d
                .total_demand
                .iter()
                .map(|(k, v)| format!("{k} {v}"))
                .collect();
            out.push_str(&format!("  total demand: {}\n", demand.join(", ")));
            let req: Vec<String> = d
                .raw_requirements
                .iter()
                .map(|(k, v)| format!("{k} {}", fmt_money(*v)))
                .collect();
            out.push_str(&format!("  raw requirements: {}\n", req.join(", ")));
        }
        if !self.situations.is_empty() {
            out.push_str("\nSituations\n");
            let mut t = Table::new(
                [
                    "situation",
                    "raw warehouses",
                    "product warehouses",
                    "transport",
                ]
                .map(String::from)
                .to_vec(),
            );
            for s in &self.situations {
                let raw: Vec<String> = s
                    .plants
                    .iter()
                    .map(|p| format!("{p}:{}", s.raw_warehouses[p]))
                    .collect();
                t.row(vec![
                    s.label.clone(),
                    raw.join(" "),
                    s.product_warehouses.join(" "),
                    fmt_money(s.transport_cost),
                ]);
            }
            out.push_str(&t.render());
            for s in &self.situations {
                if let Some(d) = &s.details {
                    out.push_str(&format!("\nDetails {}\n", s.label));
                    let mut t = Table::new(
                        [
                            "plant",
                            "product",
                            "J",
                            "qty",
                            "input cost",
                            "Q",
                            "unit value",
                            "net profit",
                        ]
                        .map(String::from)
                        .to_vec(),
                    );
                    for l in &d.plant_lines {
                        t.row(vec![
                            l.plant.clone(),
                            l.product.clone(),
                            format!("{}", l.factor),
                            l.quantity.to_string(),
                            fmt_money(l.input_cost),
                            fmt_money(l.output_value),
                            fmt_money(l.unit_value),
                            fmt_money(l.net_profit),
                        ]);
                    }
                    out.push_str(&t.render());
                    let mut t = Table::new(
                        [
                            "product",
                            "plant",
                            "warehouse",
                            "store",
                            "units",
                            "unit cost",
                        ]
                        .map(String::from)
                        .to_vec(),
                    );
                    for sh in &d.shipments {
                        t.row(vec![
                            sh.product.clone(),
                            sh.plant.clone(),
                            sh.warehouse.clone(),
                            sh.store.clone(),
                            sh.units.to_string(),
                            fmt_money(sh.unit_cost),
                        ]);
                    }
                    out.push('\n');
                    out.push_str(&t.render());
                    let a = &s.agent1;
                    out.push_str(&format!(
                        "agent 1: raw fees {} - raw handling {} + product fees {} - product handling {} - transport {} = {}\n",
                        fmt_money(a.raw_storage_income),
                        fmt_money(a.raw_handling_cost),
                        fmt_money(a.product_storage_income),
                        fmt_money(a.product_handling_cost),
                        fmt_money(a.transport_cost),
                        fmt_money(a.total())
                    ));
                }
            }
        }
        if let Some(p) = &self.payoffs {
            out.push_str("\nPayoff matrix\n");
            out.push_str(&self.matrix_table(p));
        }
        if let Some(ideal) = &self.ideal {
            out.push_str("\nIdeal vector\n");
            let mut t = Table::new(vec![String::new(), "ideal".into()]);
            for (name, v) in self.agents.iter().zip(ideal) {
                t.row(vec![name.clone(), fmt_money(*v)]);
            }
            out.push_str(&t.render());
        }
        out.push_str("\nResiduals\n");
        out.push_str(&self.matrix_table(&self.residuals));
        if let Some(scored) = &self.scored_residuals {
            out.push_str("\nNormalized residuals\n");
            let mut t = Table::new(
                std::iter::once(String::new())
                    .chain(self.labels.iter().cloned())
                    .collect(),
            );
            for (name, row) in self.agents.iter().zip(scored) {
                t.row(
                    std::iter::once(name.clone())
                        .chain(row.iter().map(|v| format!("{v:.4}")))
                        .collect(),
                );
            }
            out.push_str(&t.render());
        }
        out.push_str("\nSorted residuals\n");
        let mut t = Table::new(
            std::iter::once("rank".to_string())
                .chain(self.labels.iter().cloned())
                .collect(),
        );
        let l = self.sorted_residuals.first().map_or(0, Vec::len);
        for pos in 0..l {
            t.row(
                std::iter::once((pos + 1).to_string())
                    .chain(self.sorted_residuals.iter().map(|col| fmt_money(col[pos])))
                    .collect(),
            );
        }
        out.push_str(&t.render());

        out.push_str("\nSelection\n");
        out.push_str(&format!(
            "  selected: {}\n",
            self.selection.selected.join(", ")
        ));
        out.push_str(&format!(
            "  deciding value: {}\n",
            fmt_money(self.selection.deciding_value)
        ));
        for step in &self.selection.trace {
            out.push_str(&format!(
                "  rank {} from the top: minimum {} kept {}\n",
                step.rank,
                fmt_money(step.value),
                step.survivors.join(", ")
            ));
        }
        if !self.notes.is_empty() {
            out.push_str("\nNotes\n");
            for n in &self.notes {
                out.push_str(&format!("  {n}\n"));
            }
        }
        out
    }
}
