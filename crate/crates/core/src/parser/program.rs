//! Environments and goal sets derived from a parsed file.

use thiserror::Error;

use crate::assertions::Assertion;
use crate::ast::{Contract, ContractEnv, ProcEnv};
use crate::relvcgen::{rel_goals, relational_view, RelContract, RelContractEnv, RelGoalSpec};
use crate::vcgen::{tf, triple_goals, Goal, VcError};

use super::{ProgramFile, Property};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GoalSetError {
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error(transparent)]
    Vc(#[from] VcError),
}

impl ProgramFile {
    pub fn proc_env(&self) -> ProcEnv {
        self.procs.iter().map(|d| (d.name.clone(), d.body.clone())).collect()
    }

    /// Procedure contracts; absent clauses are `true`.
    pub fn contract_env(&self) -> ContractEnv {
        let mut env = ContractEnv::new();
        for d in &self.procs {
            env.insert(
                d.name.clone(),
                Contract {
                    pre: d.pre.clone().unwrap_or_else(Assertion::tt),
                    post: d.post.clone().unwrap_or_else(Assertion::tt),
                },
            );
        }
        env
    }

    /// Relational contracts: the declared entries, plus a singleton entry
    /// for every procedure with a declared contract and no explicit
    /// singleton.
    pub fn rel_env(&self) -> Result<RelContractEnv, VcError> {
        let mut env = RelContractEnv::new();
        for r in &self.rel_contracts {
            env.insert(
                r.procs.clone(),
                RelContract {
                    pre: r.pre.clone(),
                    post: r.post.clone(),
                },
            )?;
        }
        for d in &self.procs {
            let key = vec![d.name.clone()];
            if (d.pre.is_some() || d.post.is_some()) && env.get(&key).is_none() {
                let pre = d.pre.clone().unwrap_or_else(Assertion::tt);
                let post = d.post.clone().unwrap_or_else(Assertion::tt);
                env.insert(
                    key,
                    RelContract {
                        pre: relational_view(&pre),
                        post: relational_view(&post),
                    },
                )?;
            }
        }
        Ok(env)
    }

    pub fn property(&self, label: &str) -> Option<&Property> {
        self.properties.iter().find(|p| p.label == label)
    }

    fn selected(&self, label: Option<&str>) -> Result<Vec<&Property>, GoalSetError> {
        match label {
            Some(l) => Ok(vec![self
                .property(l)
                .ok_or_else(|| GoalSetError::UnknownProperty(l.to_string()))?]),
            None => Ok(self.properties.iter().collect()),
        }
    }

    /// Procedure obligations plus the goals of every single-run property
    /// (or only `label`, which must then be single-run).
    pub fn hoare_goals(&self, label: Option<&str>) -> Result<Vec<Goal>, GoalSetError> {
        let env = self.contract_env();
        let mut goals = tf(&env, &self.proc_env())?;
        for p in self.selected(label)? {
            if p.commands.len() == 1 {
                goals.extend(triple_goals(&p.label, &p.pre, &p.commands[0], &p.post, &env)?);
            } else if label.is_some() {
                return Err(VcError::LengthMismatch {
                    expected: 1,
                    got: p.commands.len(),
                }
                .into());
            }
        }
        Ok(goals)
    }

    pub fn rel_spec(p: &Property) -> RelGoalSpec {
        let view = |a: &Assertion| {
            if p.commands.len() == 1 {
                relational_view(a)
            } else {
                a.clone()
            }
        };
        RelGoalSpec {
            label: p.label.clone(),
            commands: p.commands.clone(),
            pre: view(&p.pre),
            post: view(&p.post),
        }
    }

    /// Relational goals of every property, or only `label`.
    pub fn rel_goals(&self, label: Option<&str>) -> Result<Vec<Goal>, GoalSetError> {
        let rel = self.rel_env()?;
        let procs = self.proc_env();
        let mut goals = Vec::new();
        for p in self.selected(label)? {
            goals.extend(rel_goals(&Self::rel_spec(p), &rel, &procs)?);
        }
        Ok(goals)
    }
}

#[cfg(test)]
mod tests {
    use crate::parser::parse;

    const SRC: &str = "
        proc sum ensures old(x1) >= old(x2) ==> old(x3) = x3 {
            if (x1 < x2) { x3 := x3 + x1; x1 := x1 + 1; call sum }
        }
        proc id { skip }
        relational [sum, sum] requires x1<1> = x1<2> ensures x3<1> = x3<2>
        property H { call sum } ensures old(x1) >= old(x2) ==> old(x3) = x3
        property R { call sum } ~ { call sum } requires x1<1> = x1<2> ensures x3<1> = x3<2>
    ";

    #[test]
    fn lifted_contracts() {
        let f = parse(SRC).unwrap();
        let rel = f.rel_env().unwrap();
        assert_eq!(rel.len(), 2);
        assert!(rel.get(&["sum".to_string()]).is_some());
        assert!(rel.get(&["id".to_string()]).is_none());
    }

    #[test]
    fn goal_labels() {
        let f = parse(SRC).unwrap();
        let labels: Vec<_> = f.hoare_goals(None).unwrap().into_iter().map(|g| g.label).collect();
        assert_eq!(labels, ["tf.id.aux", "tf.id.main", "tf.sum.aux", "tf.sum.main", "H.aux", "H.main"]);
        let labels: Vec<_> = f.rel_goals(Some("R")).unwrap().into_iter().map(|g| g.label).collect();
        assert_eq!(labels, ["R.tfr.sum", "R.tfr.sum,sum", "R.hyp2", "R.hyp3"]);
        assert!(f.rel_goals(Some("nope")).is_err());
        assert!(f.hoare_goals(Some("R")).is_err());
    }
}
