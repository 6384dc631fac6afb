#[path = "support/asymmetry.rs"]
mod asymmetry;

#[test]
fn each_role_sees_only_its_column() {
    asymmetry::check_worlds(2024, 200);
}
