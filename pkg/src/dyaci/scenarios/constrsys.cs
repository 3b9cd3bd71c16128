# general system over atoms a, b, c and one variable
senc(X, a), pair(c, a) |> b
{X . c} |> a
