use std::fmt;

use super::{ConstraintAtom, ConstraintExpr, CoreType, LinearPredicate, Relation, TypeBody, TypeDecl, TypeSystem};

impl fmt::Display for CoreType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreType::Int { collect: None } => f.write_str("int"),
            CoreType::Int { collect: Some(g) } => write!(f, "(int[@collect {g}])"),
            CoreType::Float => f.write_str("float"),
            CoreType::Named(n) => f.write_str(n),
            CoreType::Product(items) => {
                f.write_str("(")?;
                write_product(f, items)?;
                f.write_str(")")
            }
        }
    }
}

fn write_product(f: &mut fmt::Formatter<'_>, items: &[CoreType]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(" * ")?;
        }
        write!(f, "{t}")?;
    }
    Ok(())
}

impl fmt::Display for LinearPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*x", self.coef)?;
        if self.constant >= 0 {
            write!(f, " + {}", self.constant)?;
        } else {
            write!(f, " - {}", self.constant.unsigned_abs())?;
        }
        match self.rel {
            Relation::Eq => f.write_str(" = 0"),
            Relation::Le => f.write_str(" <= 0"),
        }
    }
}

impl fmt::Display for ConstraintAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ConstraintAtom::AllDiff { group } => write!(f, "alldiff x {group}"),
            ConstraintAtom::Increasing { group, strict: false } => write!(f, "increasing x {group}"),
            ConstraintAtom::Increasing { group, strict: true } => write!(f, "increasing_strict x {group}"),
            ConstraintAtom::Decreasing { group, strict: false } => write!(f, "decreasing x {group}"),
            ConstraintAtom::Decreasing { group, strict: true } => write!(f, "decreasing_strict x {group}"),
            ConstraintAtom::Arith(p) => write!(f, "{p}"),
        }
    }
}

impl fmt::Display for ConstraintExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("fun x -> ")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl fmt::Display for TypeDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type {} =", self.name)?;
        match &self.body {
            TypeBody::Core(CoreType::Product(items)) => {
                f.write_str(" ")?;
                write_product(f, items)?;
            }
            TypeBody::Core(t) => write!(f, " {t}")?,
            TypeBody::Sum(ctors) => {
                for c in ctors {
                    write!(f, "\n  | {}", c.name)?;
                    if !c.args.is_empty() {
                        f.write_str(" of ")?;
                        write_product(f, &c.args)?;
                    }
                }
            }
        }
        if let Some(c) = &self.constraint {
            write!(f, "\n[@@satisfying {c}]")?;
        }
        Ok(())
    }
}

impl fmt::Display for TypeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.decls().enumerate() {
            if i > 0 {
                f.write_str("\n\n")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("\n")
    }
}
