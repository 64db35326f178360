//! Instances, valuations and allocations.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

pub type AgentId = usize;
pub type ItemId = usize;
pub type Bundle = BTreeSet<ItemId>;

/// Table valuations store all `2^m` subset values, so they are capped here.
pub const MAX_TABLE_ITEMS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Good,
    Chore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub kind: ItemKind,
}

impl Item {
    pub fn good(id: ItemId) -> Self {
        Item { id, kind: ItemKind::Good }
    }

    pub fn chore(id: ItemId) -> Self {
        Item { id, kind: ItemKind::Chore }
    }
}

/// Bitmask of a bundle, bit `i` standing for item `i`. Only valid for `m <= 64`.
pub(crate) fn bundle_mask(bundle: &Bundle) -> u64 {
    bundle.iter().fold(0u64, |acc, &g| acc | (1u64 << g))
}

pub(crate) fn mask_bundle(mask: u64) -> Bundle {
    (0..64).filter(|g| mask >> g & 1 == 1).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Valuation {
    /// One value per item; a bundle is worth the sum of its items.
    Additive(Vec<Rational>),
    /// Complete subset table indexed by bitmask (bit `i` = item `i`).
    Table(Vec<Rational>),
    /// Strict priority order over items, most important first.
    Lexicographic(Vec<ItemId>),
}

impl Valuation {
    pub fn additive<I, T>(values: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: Into<Rational>,
    {
        Valuation::Additive(values.into_iter().map(Into::into).collect())
    }

    /// Builds a table from `(subset, value)` entries. Every subset of the `m`
    /// items must appear exactly once.
    pub fn table_from_entries(m: usize, entries: &[(Bundle, Rational)]) -> Result<Self> {
        if m > MAX_TABLE_ITEMS {
            return Err(Error::TooLarge { what: "table valuation", size: m, bound: MAX_TABLE_ITEMS });
        }
        let size = 1usize << m;
        let mut values: Vec<Option<Rational>> = vec![None; size];
        for (set, value) in entries {
            if let Some(&bad) = set.iter().find(|&&g| g >= m) {
                return Err(Error::InvalidInstance(format!("table entry names unknown item {bad}")));
            }
            let slot = &mut values[bundle_mask(set) as usize];
            if slot.is_some() {
                return Err(Error::InvalidInstance(format!("duplicate table entry for {set:?}")));
            }
            *slot = Some(value.clone());
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(mask, v)| {
                v.ok_or_else(|| {
                    Error::InvalidInstance(format!(
                        "table is missing subset {:?}",
                        mask_bundle(mask as u64)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Valuation::Table(values))
    }

    pub fn is_numeric(&self) -> bool {
        !matches!(self, Valuation::Lexicographic(_))
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, Valuation::Additive(_))
    }

    /// Exact value of `bundle`, or `None` for lexicographic valuations.
    pub fn value(&self, bundle: &Bundle) -> Option<Rational> {
        match self {
            Valuation::Additive(values) => Some(bundle.iter().map(|&g| &values[g]).sum()),
            Valuation::Table(values) => Some(values[bundle_mask(bundle) as usize].clone()),
            Valuation::Lexicographic(_) => None,
        }
    }

    /// Value of a single item as a bundle.
    pub fn item_value(&self, item: ItemId) -> Option<Rational> {
        match self {
            Valuation::Additive(values) => Some(values[item].clone()),
            Valuation::Table(values) => Some(values[1usize << item].clone()),
            Valuation::Lexicographic(_) => None,
        }
    }

    /// Strict preference of `a` over `b`. `kinds` is only consulted for
    /// lexicographic valuations.
    pub fn prefers(&self, kinds: &[ItemKind], a: &Bundle, b: &Bundle) -> bool {
        match self {
            Valuation::Lexicographic(priority) => lex_prefers(priority, kinds, a, b),
            _ => self.value(a) > self.value(b),
        }
    }

    /// Weak preference of `a` over `b`.
    pub fn weakly_prefers(&self, kinds: &[ItemKind], a: &Bundle, b: &Bundle) -> bool {
        !self.prefers(kinds, b, a)
    }
}

/// The first item (by priority) on which the bundles differ decides: having a
/// good beats not having it, not having a chore beats having it.
pub(crate) fn lex_prefers(priority: &[ItemId], kinds: &[ItemKind], a: &Bundle, b: &Bundle) -> bool {
    for &o in priority {
        let in_a = a.contains(&o);
        let in_b = b.contains(&o);
        if in_a != in_b {
            return match kinds[o] {
                ItemKind::Good => in_a,
                ItemKind::Chore => in_b,
            };
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    items: Vec<Item>,
    kinds: Vec<ItemKind>,
    valuations: Vec<Valuation>,
}

impl Instance {
    pub fn new(items: Vec<Item>, valuations: Vec<Valuation>) -> Result<Self> {
        if valuations.is_empty() {
            return Err(Error::InvalidInstance("an instance needs at least one agent".into()));
        }
        let m = items.len();
        for (idx, item) in items.iter().enumerate() {
            if item.id != idx {
                return Err(Error::InvalidInstance(format!(
                    "items[{idx}]: id {} must equal its position",
                    item.id
                )));
            }
        }
        let goods_only = items.iter().all(|it| it.kind == ItemKind::Good);
        for (agent, valuation) in valuations.iter().enumerate() {
            match valuation {
                Valuation::Additive(values) => {
                    if values.len() != m {
                        return Err(Error::InvalidInstance(format!(
                            "valuations[{agent}].values: expected {m} values, got {}",
                            values.len()
                        )));
                    }
                    for (g, v) in values.iter().enumerate() {
                        match items[g].kind {
                            ItemKind::Good if v.is_negative() => {
                                return Err(Error::InvalidInstance(format!(
                                    "valuations[{agent}].values[{g}]: negative value {v} on a good"
                                )))
                            }
                            ItemKind::Chore if v.is_positive() => {
                                return Err(Error::InvalidInstance(format!(
                                    "valuations[{agent}].values[{g}]: positive value {v} on a chore"
                                )))
                            }
                            _ => {}
                        }
                    }
                }
                Valuation::Table(values) => {
                    if m > MAX_TABLE_ITEMS {
                        return Err(Error::TooLarge { what: "table valuation", size: m, bound: MAX_TABLE_ITEMS });
                    }
                    if values.len() != 1 << m {
                        return Err(Error::InvalidInstance(format!(
                            "valuations[{agent}]: table must have {} entries, got {}",
                            1usize << m,
                            values.len()
                        )));
                    }
                    if goods_only {
                        for mask in 0..values.len() {
                            for g in 0..m {
                                let sup = mask | (1 << g);
                                if values[mask] > values[sup] {
                                    return Err(Error::InvalidInstance(format!(
                                        "valuations[{agent}]: table is not monotone: {:?} is worth more than {:?}",
                                        mask_bundle(mask as u64),
                                        mask_bundle(sup as u64)
                                    )));
                                }
                            }
                        }
                    }
                }
                Valuation::Lexicographic(priority) => {
                    let mut seen = vec![false; m];
                    let valid = priority.len() == m
                        && priority.iter().all(|&o| o < m && !std::mem::replace(&mut seen[o], true));
                    if !valid {
                        return Err(Error::InvalidInstance(format!(
                            "valuations[{agent}].priority: not a permutation of the {m} items"
                        )));
                    }
                }
            }
        }
        let kinds = items.iter().map(|it| it.kind).collect();
        Ok(Instance { items, kinds, valuations })
    }

    /// Goods-only instance with one additive value vector per agent.
    pub fn goods_additive<R, T>(rows: R) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = T>,
        T: Into<Rational>,
    {
        let valuations: Vec<Valuation> = rows.into_iter().map(Valuation::additive).collect();
        let m = match valuations.first() {
            Some(Valuation::Additive(v)) => v.len(),
            _ => 0,
        };
        Instance::new((0..m).map(Item::good).collect(), valuations)
    }

    /// Chores-only instance; values must be `<= 0`.
    pub fn chores_additive<R, T>(rows: R) -> Result<Self>
    where
        R: IntoIterator,
        R::Item: IntoIterator<Item = T>,
        T: Into<Rational>,
    {
        let valuations: Vec<Valuation> = rows.into_iter().map(Valuation::additive).collect();
        let m = match valuations.first() {
            Some(Valuation::Additive(v)) => v.len(),
            _ => 0,
        };
        Instance::new((0..m).map(Item::chore).collect(), valuations)
    }

    pub fn n(&self) -> usize {
        self.valuations.len()
    }

    pub fn m(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn kinds(&self) -> &[ItemKind] {
        &self.kinds
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn valuation(&self, agent: AgentId) -> &Valuation {
        &self.valuations[agent]
    }

    pub fn all_items(&self) -> Bundle {
        (0..self.m()).collect()
    }

    pub fn is_goods_only(&self) -> bool {
        self.kinds.iter().all(|&k| k == ItemKind::Good)
    }

    pub fn is_chores_only(&self) -> bool {
        self.kinds.iter().all(|&k| k == ItemKind::Chore)
    }

    pub fn is_good(&self, item: ItemId) -> bool {
        self.kinds[item] == ItemKind::Good
    }

    /// Same items, agent `agent` now valued by `valuation`.
    pub fn with_valuation(&self, agent: AgentId, valuation: Valuation) -> Result<Instance> {
        let mut valuations = self.valuations.clone();
        valuations[agent] = valuation;
        Instance::new(self.items.clone(), valuations)
    }

    /// Same items, every agent replaced by the valuation of `proxy[agent]`.
    pub fn with_proxies(&self, proxy: &[AgentId]) -> Instance {
        Instance {
            items: self.items.clone(),
            kinds: self.kinds.clone(),
            valuations: proxy.iter().map(|&p| self.valuations[p].clone()).collect(),
        }
    }

    /// `n` copies of a single valuation over these items.
    pub fn replicated(&self, valuation: &Valuation, n: usize) -> Instance {
        Instance {
            items: self.items.clone(),
            kinds: self.kinds.clone(),
            valuations: vec![valuation.clone(); n],
        }
    }

    pub(crate) fn check_agent(&self, agent: AgentId) -> Result<()> {
        if agent >= self.n() {
            return Err(Error::InvalidArgument(format!("agent {agent} out of range (n = {})", self.n())));
        }
        Ok(())
    }
}

/// A complete allocation: bundles are pairwise disjoint and cover every item.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Allocation {
    bundles: Vec<Bundle>,
}

impl Allocation {
    pub fn new(bundles: Vec<Bundle>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m];
        for (agent, bundle) in bundles.iter().enumerate() {
            for &g in bundle {
                if g >= m {
                    return Err(Error::InvalidAllocation(format!("agent {agent} holds unknown item {g}")));
                }
                if std::mem::replace(&mut seen[g], true) {
                    return Err(Error::InvalidAllocation(format!("item {g} is allocated twice")));
                }
            }
        }
        if let Some(g) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidAllocation(format!("item {g} is not allocated")));
        }
        Ok(Allocation { bundles })
    }

    /// Validates against an instance: one bundle per agent, exact partition.
    pub fn for_instance(inst: &Instance, bundles: Vec<Bundle>) -> Result<Self> {
        if bundles.len() != inst.n() {
            return Err(Error::InvalidAllocation(format!(
                "expected {} bundles, got {}",
                inst.n(),
                bundles.len()
            )));
        }
        Allocation::new(bundles, inst.m())
    }

    /// `owner[g]` is the agent receiving item `g`.
    pub fn from_owners(owner: &[AgentId], n: usize) -> Result<Self> {
        let mut bundles = vec![Bundle::new(); n];
        for (g, &a) in owner.iter().enumerate() {
            if a >= n {
                return Err(Error::InvalidAllocation(format!("item {g} assigned to unknown agent {a}")));
            }
            bundles[a].insert(g);
        }
        Ok(Allocation { bundles })
    }

    pub fn bundles(&self) -> &[Bundle] {
        &self.bundles
    }

    pub fn bundle(&self, agent: AgentId) -> &Bundle {
        &self.bundles[agent]
    }

    pub fn n(&self) -> usize {
        self.bundles.len()
    }

    pub fn into_bundles(self) -> Vec<Bundle> {
        self.bundles
    }

    pub fn owner_of(&self, item: ItemId) -> Option<AgentId> {
        self.bundles.iter().position(|b| b.contains(&item))
    }

    pub(crate) fn from_parts_unchecked(bundles: Vec<Bundle>) -> Self {
        Allocation { bundles }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HiddenSet {
    pub hidden: Bundle,
}

impl HiddenSet {
    pub fn new(hidden: Bundle) -> Self {
        HiddenSet { hidden }
    }

    pub fn len(&self) -> usize {
        self.hidden.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hidden.is_empty()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.hidden.contains(&item)
    }
}

impl FromIterator<ItemId> for HiddenSet {
    fn from_iter<I: IntoIterator<Item = ItemId>>(iter: I) -> Self {
        HiddenSet { hidden: iter.into_iter().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[ItemId]) -> Bundle {
        items.iter().copied().collect()
    }

    #[test]
    fn rejects_negative_good_and_positive_chore() {
        let err = Instance::goods_additive([[1, -1]]).unwrap_err();
        assert!(err.to_string().contains("values[1]"), "{err}");
        assert!(Instance::chores_additive([[-1, 2]]).is_err());
        assert!(Instance::chores_additive([[-1, 0]]).is_ok());
    }

    #[test]
    fn table_must_be_complete_and_monotone_for_goods() {
        let entries = vec![
            (set(&[]), Rational::from(0)),
            (set(&[0]), Rational::from(2)),
            (set(&[1]), Rational::from(1)),
            (set(&[0, 1]), Rational::from(1)),
        ];
        let table = Valuation::table_from_entries(2, &entries).unwrap();
        let err = Instance::new(vec![Item::good(0), Item::good(1)], vec![table]).unwrap_err();
        assert!(err.to_string().contains("monotone"));
        assert!(Valuation::table_from_entries(2, &entries[..3]).is_err());
    }

    #[test]
    fn lexicographic_priority_must_be_a_permutation() {
        let items = vec![Item::good(0), Item::chore(1)];
        assert!(Instance::new(items.clone(), vec![Valuation::Lexicographic(vec![0, 0])]).is_err());
        assert!(Instance::new(items, vec![Valuation::Lexicographic(vec![1, 0])]).is_ok());
    }

    #[test]
    fn lexicographic_preference_follows_priority() {
        let kinds = [ItemKind::Good, ItemKind::Good, ItemKind::Chore];
        let v = Valuation::Lexicographic(vec![0, 2, 1]);
        assert!(v.prefers(&kinds, &set(&[0]), &set(&[1])));
        assert!(!v.prefers(&kinds, &set(&[1]), &set(&[0])));
        // chore 2 outranks good 1
        assert!(v.prefers(&kinds, &set(&[]), &set(&[1, 2])));
        assert!(!v.prefers(&kinds, &set(&[1]), &set(&[1])));
    }

    #[test]
    fn allocation_must_partition_items() {
        assert!(Allocation::new(vec![set(&[0]), set(&[1])], 2).is_ok());
        assert!(Allocation::new(vec![set(&[0]), set(&[0, 1])], 2).is_err());
        assert!(Allocation::new(vec![set(&[0]), set(&[])], 2).is_err());
        assert!(Allocation::new(vec![set(&[0, 5])], 2).is_err());
    }
}
