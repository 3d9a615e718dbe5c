#!/usr/bin/env python3
"""Writes the synthetic distractor union used by the retrieval tests.

Many databases carry city/population style columns; those land in large
column clusters. The employee_hire_evaluation.employee table is the
designated micro-case: its description is a weaker match for the question
than several city tables, but its columns are specific.

usage: gen_distractor_union.py <out-dir>
"""
import json
import sys
from pathlib import Path

# db_id -> [(table, description, [(column, natural name, type), ...])]
DBS = {
    "employee_hire_evaluation": [
        ("employee", "staff on the payroll of the shop chain", [
            ("Employee_ID", "employee id", "number"),
            ("Name", "employee name", "text"),
            ("Age", "employee age", "number"),
            ("City", "home city of the employee", "text")]),
        ("shop", "retail shops with their location and manager", [
            ("Shop_ID", "shop id", "number"),
            ("Name", "shop name", "text"),
            ("Location", "location", "text"),
            ("District", "district", "text"),
            ("Number_products", "number of products", "number"),
            ("Manager_name", "manager name", "text")]),
        ("hiring", "which employee was hired by which shop and when", [
            ("Shop_ID", "shop id", "number"),
            ("Employee_ID", "employee id", "number"),
            ("Start_from", "start from year", "text"),
            ("Is_full_time", "is full time", "text")]),
        ("evaluation", "yearly bonus awards for employees", [
            ("Employee_ID", "employee id", "text"),
            ("Year_awarded", "year awarded", "text"),
            ("Bonus", "bonus amount", "number")]),
    ],
    "world_1": [
        ("city", "cities of the world with their district and population", [
            ("ID", "city id", "number"),
            ("Name", "city name", "text"),
            ("CountryCode", "country code", "text"),
            ("District", "district", "text"),
            ("Population", "city population", "number")]),
        ("country", "countries with continent, region, population and government", [
            ("Code", "country code", "text"),
            ("Name", "country name", "text"),
            ("Continent", "continent", "text"),
            ("Region", "region", "text"),
            ("Population", "country population", "number"),
            ("Capital", "capital city id", "number")]),
        ("countrylanguage", "languages spoken in each country", [
            ("CountryCode", "country code", "text"),
            ("Language", "language", "text"),
            ("IsOfficial", "is official language", "text"),
            ("Percentage", "percentage of speakers", "number")]),
    ],
    "city_record": [
        ("city", "cities and the regional population they come from", [
            ("City_ID", "city id", "number"),
            ("City", "city name", "text"),
            ("Hanzi", "hanzi name", "text"),
            ("Regional_Population", "regional population of the city", "number"),
            ("GDP", "city gdp", "number")]),
        ("match", "football matches with venue and score", [
            ("Match_ID", "match id", "number"),
            ("Date", "match date", "text"),
            ("Venue", "venue", "text"),
            ("Score", "score", "text"),
            ("Competition", "competition", "text")]),
        ("hosting_city", "which city hosted which match in which year", [
            ("Year", "year", "number"),
            ("Match_ID", "match id", "number"),
            ("Host_City", "host city id", "number")]),
        ("temperature", "monthly temperatures of each city", [
            ("City_ID", "city id", "number"),
            ("Jan", "january temperature", "number"),
            ("Jul", "july temperature", "number")]),
    ],
    "county_public_safety": [
        ("county_public_safety", "counties with population, police officers and crime rates", [
            ("County_ID", "county id", "number"),
            ("Name", "county name", "text"),
            ("Population", "county population", "number"),
            ("Police_officers", "number of police officers", "number"),
            ("Crime_rate", "crime rate", "number"),
            ("Location", "location", "text")]),
        ("city", "cities of each county with the share of each population group", [
            ("City_ID", "city id", "number"),
            ("County_ID", "county id", "number"),
            ("Name", "city name", "text"),
            ("White", "white population share", "number"),
            ("Asian", "asian population share", "number"),
            ("Hispanic", "hispanic population share", "number")]),
    ],
    "farm": [
        ("city", "cities and villages with official name, status, area and population", [
            ("City_ID", "city id", "number"),
            ("Official_Name", "official city name", "text"),
            ("Status", "city status", "text"),
            ("Area_km_2", "city area in square km", "number"),
            ("Population", "city population", "number"),
            ("Census_Ranking", "census ranking", "text")]),
        ("farm", "farms and their livestock counts by year", [
            ("Farm_ID", "farm id", "number"),
            ("Year", "year", "number"),
            ("Total_Horses", "total horses", "number"),
            ("Cows", "cows", "number"),
            ("Pigs", "pigs", "number")]),
        ("farm_competition", "farm competitions hosted by cities", [
            ("Competition_ID", "competition id", "number"),
            ("Year", "year", "number"),
            ("Theme", "theme", "text"),
            ("Host_city_ID", "host city id", "number")]),
        ("competition_record", "rank of each farm in each competition", [
            ("Competition_ID", "competition id", "number"),
            ("Farm_ID", "farm id", "number"),
            ("Rank", "rank", "number")]),
    ],
    "election": [
        ("county", "counties with population and zip code", [
            ("County_Id", "county id", "number"),
            ("County_name", "county name", "text"),
            ("Population", "county population", "number"),
            ("Zip_code", "zip code", "text")]),
        ("party", "political parties by year with governor and comptroller", [
            ("Party_ID", "party id", "number"),
            ("Year", "year", "number"),
            ("Party", "party name", "text"),
            ("Governor", "governor", "text")]),
        ("election", "delegates elected in each district", [
            ("Election_ID", "election id", "number"),
            ("Counties_Represented", "counties represented", "text"),
            ("District", "district", "number"),
            ("Delegate", "delegate name", "text"),
            ("Party", "party id", "number")]),
    ],
    "school_bus": [
        ("driver", "bus drivers with party and home city", [
            ("Driver_ID", "driver id", "number"),
            ("Name", "driver name", "text"),
            ("Party", "party", "text"),
            ("Home_city", "home city of the driver", "text"),
            ("Age", "driver age", "number")]),
        ("school", "schools with grade range, location and type", [
            ("School_ID", "school id", "number"),
            ("Grade", "grade", "text"),
            ("School", "school name", "text"),
            ("Location", "location", "text"),
            ("Type", "school type", "text")]),
        ("school_bus", "which driver drives the bus of which school", [
            ("School_ID", "school id", "number"),
            ("Driver_ID", "driver id", "number"),
            ("Years_Working", "years working", "number"),
            ("If_full_time", "if full time", "text")]),
    ],
    "flight_company": [
        ("airport", "airports with their city, country and codes", [
            ("id", "airport id", "number"),
            ("City", "airport city", "text"),
            ("Country", "airport country", "text"),
            ("IATA", "iata code", "text"),
            ("name", "airport name", "text")]),
        ("operate_company", "companies operating flights and their type", [
            ("id", "company id", "number"),
            ("name", "company name", "text"),
            ("Type", "company type", "text"),
            ("Incorporated_in", "incorporated in", "text")]),
        ("flight", "flights with pilot, velocity and altitude", [
            ("id", "flight id", "number"),
            ("Vehicle_Flight_number", "vehicle flight number", "text"),
            ("Date", "flight date", "text"),
            ("Pilot", "pilot", "text"),
            ("airport_id", "airport id", "number"),
            ("company_id", "company id", "number")]),
    ],
    "wedding": [
        ("people", "people with country, gender and age", [
            ("People_ID", "people id", "number"),
            ("Name", "person name", "text"),
            ("Country", "country", "text"),
            ("Is_Male", "is male", "text"),
            ("Age", "person age", "number")]),
        ("church", "churches with organizer and opening date", [
            ("Church_ID", "church id", "number"),
            ("Name", "church name", "text"),
            ("Organized_by", "organized by", "text"),
            ("Open_Date", "open date", "number")]),
        ("wedding", "weddings held in churches by year", [
            ("Church_ID", "church id", "number"),
            ("Male_ID", "male people id", "number"),
            ("Female_ID", "female people id", "number"),
            ("Year", "wedding year", "number")]),
    ],
    "museum_visit": [
        ("museum", "museums with staff numbers and opening year", [
            ("Museum_ID", "museum id", "number"),
            ("Name", "museum name", "text"),
            ("Num_of_Staff", "number of staff", "number"),
            ("Open_Year", "open year", "text")]),
        ("visitor", "museum visitors with membership level and age", [
            ("ID", "visitor id", "number"),
            ("Name", "visitor name", "text"),
            ("Level_of_membership", "level of membership", "number"),
            ("Age", "visitor age", "number")]),
        ("visit", "visits to museums with tickets and spending", [
            ("Museum_ID", "museum id", "number"),
            ("visitor_ID", "visitor id", "text"),
            ("Num_of_Ticket", "number of tickets", "number"),
            ("Total_spent", "total spent", "number")]),
    ],
    "customer_deliveries": [
        ("addresses", "postal addresses with city, state and country", [
            ("address_id", "address id", "number"),
            ("address_details", "address details", "text"),
            ("city", "address city", "text"),
            ("zip_postcode", "zip postcode", "text"),
            ("state_province_county", "state province county", "text"),
            ("country", "country", "text")]),
        ("customers", "customers with payment method and contact details", [
            ("customer_id", "customer id", "number"),
            ("payment_method", "payment method", "text"),
            ("customer_name", "customer name", "text"),
            ("customer_phone", "customer phone", "text")]),
        ("delivery_routes", "delivery routes and their details", [
            ("route_id", "route id", "number"),
            ("route_name", "route name", "text"),
            ("other_route_details", "other route details", "text")]),
    ],
    "geo": [
        ("city", "cities of each state with population", [
            ("city_name", "city name", "text"),
            ("population", "city population", "number"),
            ("country_name", "country name", "text"),
            ("state_name", "state name", "text")]),
        ("state", "states with population, area, capital and density", [
            ("state_name", "state name", "text"),
            ("population", "state population", "number"),
            ("area", "state area", "number"),
            ("capital", "capital city", "text"),
            ("density", "population density", "number")]),
        ("river", "rivers with length and the states they traverse", [
            ("river_name", "river name", "text"),
            ("length", "river length", "number"),
            ("traverse", "state traversed", "text")]),
        ("lake", "lakes with area and state", [
            ("lake_name", "lake name", "text"),
            ("area", "lake area", "number"),
            ("state_name", "state name", "text")]),
        ("mountain", "mountains with altitude and state", [
            ("mountain_name", "mountain name", "text"),
            ("mountain_altitude", "mountain altitude", "number"),
            ("state_name", "state name", "text")]),
    ],
    "apartment_rentals": [
        ("apartment_buildings", "apartment buildings with manager, address and city", [
            ("building_id", "building id", "number"),
            ("building_short_name", "building short name", "text"),
            ("building_manager", "building manager", "text"),
            ("building_address", "building address", "text"),
            ("building_city", "building city", "text")]),
        ("apartments", "apartments with type and room counts", [
            ("apt_id", "apartment id", "number"),
            ("building_id", "building id", "number"),
            ("apt_type_code", "apartment type code", "text"),
            ("bedroom_count", "bedroom count", "number")]),
        ("guests", "guests with gender and date of birth", [
            ("guest_id", "guest id", "number"),
            ("gender_code", "gender code", "text"),
            ("guest_first_name", "guest first name", "text"),
            ("date_of_birth", "date of birth", "text")]),
    ],
}

QUESTIONS = [
    ("micro_employee_cities", "employee_hire_evaluation",
     "Which cities do more than one employee under age 30 come from?",
     "SELECT city FROM employee WHERE age < 30 GROUP BY city HAVING count(*) > 1"),
    ("employee_bonus_names", "employee_hire_evaluation",
     "Show the name of each employee and the bonus they were awarded.",
     "SELECT T1.Name, T2.Bonus FROM employee AS T1 JOIN evaluation AS T2 ON T1.Employee_ID = T2.Employee_ID"),
    ("shops_full_time", "employee_hire_evaluation",
     "Which shops have hired full time employees?",
     "SELECT DISTINCT T1.Name FROM shop AS T1 JOIN hiring AS T2 ON T1.Shop_ID = T2.Shop_ID WHERE T2.Is_full_time = 'T'"),
    ("county_police", "county_public_safety",
     "How many police officers does each county have?",
     "SELECT Name, Police_officers FROM county_public_safety"),
    ("drivers_hartford", "school_bus",
     "Find the names of bus drivers older than 40 whose home city is Hartford.",
     "SELECT Name FROM driver WHERE Home_city = 'Hartford' AND Age > 40"),
    ("airports_amsterdam", "flight_company",
     "Which airports are in the city of Amsterdam?",
     "SELECT name FROM airport WHERE City = 'Amsterdam'"),
    ("farm_city_names", "farm",
     "List the official names of cities with population above 1500.",
     "SELECT Official_Name FROM city WHERE Population > 1500"),
    ("city_gdp", "city_record",
     "What is the GDP of cities with regional population over 10 million?",
     "SELECT City, GDP FROM city WHERE Regional_Population > 10000000"),
    ("world_districts", "world_1",
     "Which districts have a city with population over one million?",
     "SELECT DISTINCT District FROM city WHERE Population > 1000000"),
    ("visitor_age", "museum_visit",
     "What is the average age of museum visitors with membership level above 4?",
     "SELECT avg(Age) FROM visitor WHERE Level_of_membership > 4"),
    ("rivers_largest_state", "geo",
     "Which rivers traverse the state with the largest population?",
     "SELECT river_name FROM river WHERE traverse = (SELECT state_name FROM state ORDER BY population DESC LIMIT 1)"),
    ("wedding_church_people", "wedding",
     "Names of people older than 30 who married in a church in 2015.",
     "SELECT T1.Name FROM people AS T1 JOIN wedding AS T2 ON T1.People_ID = T2.Male_ID WHERE T1.Age > 30 AND T2.Year = 2015"),
]


def manifest():
    out = []
    for db_id, tables in DBS.items():
        names = [t[0] for t in tables]
        cols_orig = [[-1, "*"]]
        cols_nat = [[-1, "*"]]
        types = ["text"]
        for ti, (_, _, cols) in enumerate(tables):
            for name, natural, typ in cols:
                cols_orig.append([ti, name])
                cols_nat.append([ti, natural])
                types.append(typ)
        out.append({
            "db_id": db_id,
            "table_names_original": names,
            "table_names": [n.replace("_", " ").lower() for n in names],
            "column_names_original": cols_orig,
            "column_names": cols_nat,
            "column_types": types,
            "primary_keys": [],
            "foreign_keys": [],
            "table_descriptions": [t[1] for t in tables],
        })
    return out


def main():
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    (out / "tables.json").write_text(json.dumps(manifest(), indent=1) + "\n")
    with open(out / "questions.jsonl", "w") as f:
        for qid, db, q, sql in QUESTIONS:
            f.write(json.dumps({"question_id": qid, "db_id": db, "question": q, "gold_sql": sql}) + "\n")
    print(sum(len(t) for t in DBS.values()), "tables,", len(QUESTIONS), "questions")


if __name__ == "__main__":
    main()
