from fractions import Fraction

from budgetfeasible import Agent, Instance


def make_instance(valuation, costs, budget, family=""):
    agents = tuple(Agent(i, Fraction(c)) for i, c in enumerate(costs))
    return Instance(agents, Fraction(budget), valuation, family)


def F(x):
    return Fraction(x)
