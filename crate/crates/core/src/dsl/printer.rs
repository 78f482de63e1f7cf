use std::fmt::Write;

use super::ast::*;

fn joined(ids: &[Ident], sep: &str) -> String {
    ids.iter().map(Ident::as_str).collect::<Vec<_>>().join(sep)
}

fn kind(d: &Decl) -> u8 {
    match d {
        Decl::Factor { .. } | Decl::Agent { .. } => 0,
        Decl::Basis { .. } => 1,
        Decl::Prepare { .. } => 2,
        Decl::Measure { .. } | Decl::Control { .. } => 3,
        Decl::Statement { .. } => 4,
        Decl::Option { .. } => 5,
    }
}

fn write_decl(out: &mut String, d: &Decl) {
    match d {
        Decl::Factor { name, labels } => {
            let _ = writeln!(out, "factor {name} {{ {} }}", joined(labels, ", "));
        }
        Decl::Agent { name } => {
            let _ = writeln!(out, "agent {name}");
        }
        Decl::Basis {
            name,
            targets,
            outcomes,
        } => {
            let _ = writeln!(out, "basis {name} on {} {{", joined(targets, " * "));
            for o in outcomes {
                let _ = writeln!(out, "  {} = {}", o.label, o.amplitude);
            }
            out.push_str("}\n");
        }
        Decl::Prepare { targets, amplitude } => {
            let _ = writeln!(out, "prepare {} = {amplitude}", joined(targets, " * "));
        }
        Decl::Measure {
            observable,
            recorder,
            collapse,
        } => {
            let _ = write!(out, "measure {observable} by {recorder}");
            match collapse {
                Collapse::No => {}
                Collapse::Yes => out.push_str(" collapse"),
                Collapse::Select(v) => {
                    let _ = write!(out, " collapse = {v}");
                }
            }
            out.push('\n');
        }
        Decl::Control {
            control,
            label,
            basis,
            targets,
        } => {
            let _ = writeln!(
                out,
                "control {control} : {label} apply {basis} on {}",
                joined(targets, " * ")
            );
        }
        Decl::Statement {
            id,
            modality,
            event,
            condition,
            expect,
        } => {
            let m = match modality {
                ModalityKw::Certain => "certain",
                ModalityKw::Possible => "possible",
            };
            let _ = write!(out, "statement {id} : {m}({event}");
            if let Some(c) = condition {
                let _ = write!(out, " given {c}");
            }
            out.push(')');
            if let Some(e) = expect {
                let _ = write!(out, " expect {e}");
            }
            out.push('\n');
        }
        Decl::Option { key, values } => {
            let _ = writeln!(out, "option {key} = {}", joined(values, ", "));
        }
    }
}

/// Canonical text of a document; parsing it gives back an equal document.
pub fn print_document(doc: &Document) -> String {
    let mut out = String::new();
    let mut last = None;
    for d in &doc.decls {
        let k = kind(&d.node);
        if last.is_some_and(|l| l != k || k == 1) {
            out.push('\n');
        }
        write_decl(&mut out, &d.node);
        last = Some(k);
    }
    out
}
