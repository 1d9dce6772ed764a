/// Age in years from birth and death years.
///
/// Both years present gives `death - birth`. A missing death year means the
/// person is assumed alive and `current_year - birth` is used. Without a
/// birth year there is no age.
pub fn compute_age(
    birth_year: Option<i32>,
    death_year: Option<i32>,
    current_year: i32,
) -> Option<i32> {
    debug_assert!(current_year >= 2001, "current_year predates Wikipedia");
    let birth = birth_year?;
    Some(death_year.unwrap_or(current_year) - birth)
}
