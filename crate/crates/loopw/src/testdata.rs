//! Frozen program texts shared by unit tests.

/// The addition program, annotated at the source level.
pub const ADD_SOURCE: &str = r#"cst p_add = proc({x, y} in X:nat(x), Y:nat(y); out Z:nat(x + y)) {
    Z := X :> nat(x + 0);
    for i := 0 until Y {
        inc(Z);
    }Z:nat(x + i);
};
var N := *;
p_add(3, 5; N);
"#;

/// The fully annotated derivation for the addition program, with its
/// obligation table.
pub const ADD_PROOF: &str = r#"{
    cst p_add = proc({x, y} in X : nat(x), Y : nat(y); out Z : nat((x + y))) {
        Z := ((X : nat(x)) :> {var'1 / nat(var'1)} by (*#1 : (x = (x + 0))) : nat((x + 0)));
        for i := 0 until (Y : nat(y)) {
            inc(Z : nat((x + i)));
            subst [Z:nat(var'2)] at var'2 by (*#2 : (s((x + i)) = (x + s(i)))) {
            }
        }Z:nat((x + i));
    };
    var N := (* : (0 = 0));
    (p_add : proc({x, y} in nat(x), nat(y); out nat((x + y))))((3 : nat(3)), (5 : nat(5)); N : nat((3 + 5))) with {x := 3, y := 5};
};
1: |- (x = (x + 0))
2: |- (s((x + i)) = (x + s(i)))
"#;
